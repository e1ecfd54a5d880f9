#pragma once

// Bridge predictor: forwards each request to an external process over a
// line-delimited stream (TCP socket or a child process' stdio).

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "simagents/errors.hpp"
#include "simagents/predictor.hpp"
#include "simagents/wire.hpp"

namespace simagents {

/// "HOST:PORT" for TCP, "exec:COMMAND" to spawn COMMAND under /bin/sh.
struct BridgeEndpoint {
  enum class Kind { tcp, exec };
  Kind kind = Kind::tcp;
  std::string host;
  std::uint16_t port = 0;
  std::string command;

  static BridgeEndpoint parse(const std::string& text) {
    BridgeEndpoint ep;
    if (text.rfind("exec:", 0) == 0) {
      ep.kind = Kind::exec;
      ep.command = text.substr(5);
      if (ep.command.empty()) throw ValidationError("endpoint '" + text + "': empty command");
      return ep;
    }
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
      throw ValidationError("endpoint '" + text + "': expected HOST:PORT or exec:COMMAND");
    ep.host = text.substr(0, colon);
    try {
      const unsigned long port = std::stoul(text.substr(colon + 1));
      if (port == 0 || port > 65535) throw std::out_of_range("port");
      ep.port = static_cast<std::uint16_t>(port);
    } catch (const std::exception&) {
      throw ValidationError("endpoint '" + text + "': invalid port");
    }
    return ep;
  }

  std::string to_string() const {
    return kind == Kind::exec ? "exec:" + command : host + ":" + std::to_string(port);
  }
};

/// Bidirectional newline-framed byte stream over one or two descriptors.
class LineStream {
 public:
  LineStream(const LineStream&) = delete;
  LineStream& operator=(const LineStream&) = delete;

  ~LineStream() {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (child_ > 0) {
      // The shell may have forked the real server; signal the whole group.
      ::kill(-child_, SIGTERM);
      ::kill(child_, SIGTERM);
      ::waitpid(child_, nullptr, 0);
    }
  }

  static std::unique_ptr<LineStream> open(const BridgeEndpoint& ep) {
    return ep.kind == BridgeEndpoint::Kind::tcp ? connect_tcp(ep.host, ep.port) : spawn(ep.command);
  }

  static std::unique_ptr<LineStream> connect_tcp(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
      throw BridgeError(BridgeFailure::connection, "cannot resolve " + host + ": " + ::gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
    int last_errno = 0;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) {
        last_errno = errno;
        continue;
      }
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return std::unique_ptr<LineStream>(new LineStream(fd, fd, -1, true));
      }
      last_errno = errno;
      ::close(fd);
    }
    throw BridgeError(BridgeFailure::connection,
                      "cannot connect to " + host + ":" + service + ": " + std::strerror(last_errno));
  }

  static std::unique_ptr<LineStream> spawn(const std::string& command) {
    // A child that exits early must surface as EPIPE, not kill the harness.
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0)
      throw BridgeError(BridgeFailure::connection, std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BridgeError(BridgeFailure::connection, std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw BridgeError(BridgeFailure::connection, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::unique_ptr<LineStream>(new LineStream(from_child[0], to_child[1], pid, false));
  }

  void write_line(const std::string& line) {
    std::string data = line;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = socket_ ? ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                : ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(BridgeFailure::connection, std::string("write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  /// Next line without its terminator. Throws BridgeError on timeout or EOF.
  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0)
        throw BridgeError(BridgeFailure::timeout, "no response within " + std::to_string(timeout.count()) + " ms",
                          wire::excerpt(buffer_));
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(BridgeFailure::connection, std::string("poll: ") + std::strerror(errno));
      }
      if (rc == 0) continue;  // deadline check above reports the timeout
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(BridgeFailure::connection, std::string("read: ") + std::strerror(errno),
                          wire::excerpt(buffer_));
      }
      if (n == 0) throw BridgeError(BridgeFailure::connection, "stream closed by peer", wire::excerpt(buffer_));
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  LineStream(int read_fd, int write_fd, pid_t child, bool socket)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child), socket_(socket) {}

  int read_fd_ = -1;
  int write_fd_ = -1;
  pid_t child_ = -1;
  bool socket_ = false;
  std::string buffer_;
};

struct BridgeConfig {
  BridgeEndpoint endpoint;
  std::chrono::milliseconds timeout{30'000};
};

/// Predictor served by an external process. One request in flight per
/// instance; the connection is opened lazily and dropped after any failure
/// so a late reply can never be matched to the next request.
class BridgePredictor final : public Predictor {
 public:
  explicit BridgePredictor(BridgeConfig config, std::string name = {})
      : config_(std::move(config)), name_(name.empty() ? "bridge:" + config_.endpoint.to_string() : std::move(name)) {}

  PredictionResponse predict(const PredictionRequest& req) override {
    validate_request(req);
    std::lock_guard lock(mutex_);
    try {
      if (!stream_) stream_ = LineStream::open(config_.endpoint);
      stream_->write_line(wire::encode_request(req));
      const std::string line = stream_->read_line(config_.timeout);
      return wire::decode_response(line, req);
    } catch (const BridgeError& e) {
      stream_.reset();
      throw BridgeError(e.kind(), e.detail() + " (step " + std::to_string(req.step) + ", " + name_ + ")",
                        e.payload_excerpt(), req.step);
    }
  }

  std::string name() const override { return name_; }

 private:
  BridgeConfig config_;
  std::string name_;
  std::mutex mutex_;
  std::unique_ptr<LineStream> stream_;
};

}  // namespace simagents
