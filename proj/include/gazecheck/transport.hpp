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

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "gazecheck/bytes.hpp"

namespace gazecheck {

using Millis = std::chrono::milliseconds;

/// Reliable ordered byte stream between two parties.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual void write(ByteView bytes) = 0;
  /// Exactly n bytes, or Timeout (no data within `timeout`) / TransportError
  /// (peer closed). `stage` labels the error.
  virtual Bytes read_exact(std::size_t n, Millis timeout, std::string_view stage) = 0;
  virtual void close() = 0;

  std::uint64_t bytes_sent() const { return sent_; }
  std::uint64_t bytes_received() const { return received_; }

 protected:
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
};

/// Connected in-process pair backed by two locked byte queues.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_duplex();

/// Blocking TCP client connection.
std::unique_ptr<Transport> tcp_connect(const std::string& host, std::uint16_t port,
                                       Millis timeout = Millis(10000));

class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  /// Port actually bound (useful with port 0).
  std::uint16_t port() const { return port_; }
  /// nullptr on timeout.
  std::unique_ptr<Transport> accept(Millis timeout);
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace gazecheck
