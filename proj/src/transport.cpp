// Copyright 2026 The gazecheck Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gazecheck/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace gazecheck {

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> buf;
  bool closed = false;
};

class DuplexEnd final : public Transport {
 public:
  DuplexEnd(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~DuplexEnd() override { close(); }

  void write(ByteView bytes) override {
    {
      std::lock_guard<std::mutex> lock(out_->mu);
      if (out_->closed) fail(ErrorCode::TransportError, "write on closed channel");
      out_->buf.insert(out_->buf.end(), bytes.begin(), bytes.end());
    }
    out_->cv.notify_all();
    sent_ += bytes.size();
  }

  Bytes read_exact(std::size_t n, Millis timeout, std::string_view stage) override {
    Bytes out;
    out.reserve(n);
    std::unique_lock<std::mutex> lock(in_->mu);
    while (out.size() < n) {
      // The timeout bounds each silent stretch, not the whole read.
      if (!in_->cv.wait_for(lock, timeout, [&] { return !in_->buf.empty() || in_->closed; })) {
        fail(ErrorCode::Timeout, std::string(stage));
      }
      if (in_->buf.empty()) fail(ErrorCode::TransportError, std::string(stage) + ": peer closed");
      const std::size_t take = std::min(n - out.size(), in_->buf.size());
      out.insert(out.end(), in_->buf.begin(), in_->buf.begin() + static_cast<std::ptrdiff_t>(take));
      in_->buf.erase(in_->buf.begin(), in_->buf.begin() + static_cast<std::ptrdiff_t>(take));
    }
    received_ += n;
    return out;
  }

  void close() override {
    for (auto* p : {in_.get(), out_.get()}) {
      {
        std::lock_guard<std::mutex> lock(p->mu);
        p->closed = true;
      }
      p->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

class TcpStream final : public Transport {
 public:
  explicit TcpStream(int fd) : fd_(fd) {
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpStream() override { close(); }

  void write(ByteView bytes) override {
    std::size_t off = 0;
    while (off < bytes.size()) {
      ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::TransportError, std::string("send: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
    sent_ += bytes.size();
  }

  Bytes read_exact(std::size_t n, Millis timeout, std::string_view stage) override {
    Bytes out(n);
    std::size_t off = 0;
    while (off < n) {
      pollfd p{fd_, POLLIN, 0};
      int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::TransportError, std::string(stage) + ": poll: " + std::strerror(errno));
      }
      if (r == 0) fail(ErrorCode::Timeout, std::string(stage));
      ssize_t got = ::recv(fd_, out.data() + off, n - off, 0);
      if (got == 0) fail(ErrorCode::TransportError, std::string(stage) + ": peer closed");
      if (got < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail(ErrorCode::TransportError, std::string(stage) + ": recv: " + std::strerror(errno));
      }
      off += static_cast<std::size_t>(got);
    }
    received_ += n;
    return out;
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) fail(ErrorCode::TransportError, host + ": " + gai_strerror(rc));
  return res;
}

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_duplex() {
  auto a = std::make_shared<Pipe>();
  auto b = std::make_shared<Pipe>();
  return {std::make_unique<DuplexEnd>(a, b), std::make_unique<DuplexEnd>(b, a)};
}

std::unique_ptr<Transport> tcp_connect(const std::string& host, std::uint16_t port, Millis timeout) {
  addrinfo* res = resolve(host, port, false);
  std::string last = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      rc = ::poll(&p, 1, static_cast<int>(timeout.count())) == 1 ? 0 : -1;
      int err = 0;
      socklen_t len = sizeof err;
      if (rc == 0) ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      if (rc != 0 || err != 0) {
        last = err ? std::strerror(err) : "connect timeout";
        ::close(fd);
        continue;
      }
    } else if (rc < 0) {
      last = std::strerror(errno);
      ::close(fd);
      continue;
    }
    ::fcntl(fd, F_SETFL, flags);
    ::freeaddrinfo(res);
    return std::make_unique<TcpStream>(fd);
  }
  ::freeaddrinfo(res);
  fail(ErrorCode::TransportError, "connect " + host + ":" + std::to_string(port) + ": " + last);
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  addrinfo* res = resolve(host, port, true);
  std::string last = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      fd_ = fd;
      break;
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) fail(ErrorCode::TransportError, "bind " + host + ":" + std::to_string(port) + ": " + last);
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len);
  port_ = ss.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port)
                                   : ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
}

TcpListener::~TcpListener() { close(); }

std::unique_ptr<Transport> TcpListener::accept(Millis timeout) {
  if (fd_ < 0) fail(ErrorCode::TransportError, "listener closed");
  pollfd p{fd_, POLLIN, 0};
  int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (r <= 0) return nullptr;
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) fail(ErrorCode::TransportError, std::string("accept: ") + std::strerror(errno));
  return std::make_unique<TcpStream>(fd);
}

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace gazecheck
