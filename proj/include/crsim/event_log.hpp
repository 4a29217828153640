#pragma once

// Event label stream for external log consumers.
//
// Each simulation event becomes one newline-terminated ASCII line,
// comma-separated with no spaces:
//
//   PU Off to On,<su_id>,<channel_id>
//   PU On to Off,<channel_id>
//   Switching,<switch_time_us>
//   SU Using,<su_id>,<duration_us>
//   SU Preempted,<su_id>,<channel_id>
//
// Lines go to any attached sinks in emission order: a file, an in-memory
// buffer, and/or a single TCP client accepted on a configurable port
// (default 9000). Optionally the simulator refuses to start until a client
// has connected. An optional "<sim_time_us>|" prefix is available behind a
// flag; the default output carries no timestamps.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "crsim/time.hpp"

namespace crsim {

enum class EventKind {
  kPuOffOn,
  kPuOnOff,
  kSwitching,
  kSuUsing,
  kSuPreempted,
};

struct EventRecord {
  SimTime sim_time = 0;
  EventKind kind = EventKind::kPuOffOn;
  std::int64_t a = 0;  // su_id / channel_id / switch time, per kind
  std::int64_t b = 0;
};

inline std::string format_event(const EventRecord& record) {
  char buf[96];
  int n = 0;
  switch (record.kind) {
    case EventKind::kPuOffOn:
      n = std::snprintf(buf, sizeof(buf), "PU Off to On,%lld,%lld\n",
                        static_cast<long long>(record.a),
                        static_cast<long long>(record.b));
      break;
    case EventKind::kPuOnOff:
      n = std::snprintf(buf, sizeof(buf), "PU On to Off,%lld\n",
                        static_cast<long long>(record.a));
      break;
    case EventKind::kSwitching:
      n = std::snprintf(buf, sizeof(buf), "Switching,%lld\n",
                        static_cast<long long>(record.a));
      break;
    case EventKind::kSuUsing:
      n = std::snprintf(buf, sizeof(buf), "SU Using,%lld,%lld\n",
                        static_cast<long long>(record.a),
                        static_cast<long long>(record.b));
      break;
    case EventKind::kSuPreempted:
      n = std::snprintf(buf, sizeof(buf), "SU Preempted,%lld,%lld\n",
                        static_cast<long long>(record.a),
                        static_cast<long long>(record.b));
      break;
  }
  return std::string(buf, static_cast<std::size_t>(n));
}

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void write(std::string_view line) = 0;
};

class FileSink : public EventSink {
 public:
  explicit FileSink(const std::string& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
      throw std::runtime_error("cannot open event log file: " + path);
    }
  }

  void write(std::string_view line) override {
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

class MemorySink : public EventSink {
 public:
  void write(std::string_view line) override { lines_.emplace_back(line); }

  const std::vector<std::string>& lines() const { return lines_; }

  std::string joined() const {
    std::string s;
    for (const auto& l : lines_) {
      s += l;
    }
    return s;
  }

  void clear() { lines_.clear(); }

 private:
  std::vector<std::string> lines_;
};

// Line-oriented TCP server accepting a single client. Writes happen on the
// simulation thread with blocking sends, so a slow client applies
// backpressure rather than reordering records; a disconnect stops TCP
// delivery without aborting the run.
class TcpServerSink : public EventSink {
 public:
  explicit TcpServerSink(std::uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
      throw std::runtime_error("socket() failed");
    }
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
        0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw std::runtime_error("cannot bind event port " +
                               std::to_string(port));
    }
    if (::listen(listen_fd_, 1) < 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw std::runtime_error("listen() failed on port " +
                               std::to_string(port));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  ~TcpServerSink() override {
    shutting_down_.store(true);
    if (listen_fd_ >= 0) {
      ::shutdown(listen_fd_, SHUT_RDWR);
      ::close(listen_fd_);
    }
    if (acceptor_.joinable()) {
      acceptor_.join();
    }
    const int fd = client_fd_.load();
    if (fd >= 0) {
      ::close(fd);
    }
  }

  TcpServerSink(const TcpServerSink&) = delete;
  TcpServerSink& operator=(const TcpServerSink&) = delete;

  std::uint16_t port() const { return port_; }

  bool connected() const { return client_fd_.load() >= 0; }

  // Blocks until one client connects (connection gating).
  void wait_for_client() {
    if (connected()) {
      return;
    }
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      throw std::runtime_error("accept() failed");
    }
    client_fd_.store(fd);
  }

  // Accepts one client in the background; records emitted before the client
  // connects are not replayed to it.
  void accept_in_background() {
    if (acceptor_.joinable() || connected()) {
      return;
    }
    acceptor_ = std::thread([this] {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0 && !shutting_down_.load()) {
        client_fd_.store(fd);
      } else if (fd >= 0) {
        ::close(fd);
      }
    });
  }

  void write(std::string_view line) override {
    const int fd = client_fd_.load();
    if (fd < 0) {
      return;
    }
    std::size_t off = 0;
    while (off < line.size()) {
      const ssize_t n =
          ::send(fd, line.data() + off, line.size() - off, MSG_NOSIGNAL);
      if (n <= 0) {
        ::close(fd);
        client_fd_.store(-1);  // client went away: drop TCP, keep running
        return;
      }
      off += static_cast<std::size_t>(n);
    }
  }

 private:
  int listen_fd_ = -1;
  std::atomic<int> client_fd_{-1};
  std::atomic<bool> shutting_down_{false};
  std::uint16_t port_ = 0;
  std::thread acceptor_;
};

// Fan-out of event records to the attached sinks, in emission order.
class EventEmitter {
 public:
  explicit EventEmitter(bool timestamp_prefix = false)
      : timestamp_prefix_(timestamp_prefix) {}

  void attach(EventSink* sink) { sinks_.push_back(sink); }

  void emit(const EventRecord& record) {
    if (sinks_.empty()) {
      return;
    }
    std::string line;
    if (timestamp_prefix_) {
      line = std::to_string(record.sim_time);
      line += '|';
      line += format_event(record);
    } else {
      line = format_event(record);
    }
    for (EventSink* sink : sinks_) {
      sink->write(line);
    }
  }

  bool has_sinks() const { return !sinks_.empty(); }

 private:
  bool timestamp_prefix_;
  std::vector<EventSink*> sinks_;
};

// Owns the configured sinks and performs the optional start gate: with
// gating enabled the call blocks until a client connects on the listener.
class EventPipeline {
 public:
  struct Options {
    std::optional<std::string> file_path;
    std::optional<std::uint16_t> tcp_port;
    bool gate_on_connection = false;
    bool timestamp_prefix = false;
  };

  explicit EventPipeline(const Options& options)
      : emitter_(options.timestamp_prefix), gate_(options.gate_on_connection) {
    if (options.file_path) {
      file_ = std::make_unique<FileSink>(*options.file_path);
      emitter_.attach(file_.get());
    }
    if (options.tcp_port) {
      tcp_ = std::make_unique<TcpServerSink>(*options.tcp_port);
      emitter_.attach(tcp_.get());
    } else if (options.gate_on_connection) {
      throw std::runtime_error(
          "connection gating requires a TCP listener port");
    }
  }

  // Readiness: returns once the simulation may start.
  void attach_and_gate() {
    if (tcp_) {
      if (gate_) {
        tcp_->wait_for_client();
      } else {
        tcp_->accept_in_background();
      }
    }
  }

  bool client_connected() const { return tcp_ && tcp_->connected(); }

  bool gate_satisfied() const { return !gate_ || client_connected(); }

  EventEmitter& emitter() { return emitter_; }

  TcpServerSink* tcp() { return tcp_.get(); }

  void flush() {
    if (file_) {
      file_->flush();
    }
  }

 private:
  EventEmitter emitter_;
  bool gate_;
  std::unique_ptr<FileSink> file_;
  std::unique_ptr<TcpServerSink> tcp_;
};

}  // namespace crsim
