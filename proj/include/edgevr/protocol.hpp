// Copyright 2026 The edgevr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Newline-delimited JSON environment protocol.
//
//   {"cmd":"spec"}                       -> {"obs":N,"binary":B,"alloc":A,...}
//   {"cmd":"reset","episode":e,"seed":s} -> {"obs":[...]}
//   {"cmd":"step","action":{"zf":[..],"xb":[[..]],"zb":[[..]],"wB":[..],"wF":[..]}}
//       -> {"obs":[...],"reward":r,"cost":c,"done":b,"info":{...}}
//   {"cmd":"close"}                      -> {"ok":true}
//
// Failures reply {"error":kind,"detail":text} and leave the session usable.
#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "edgevr/env.hpp"
#include "json.hpp"

namespace edgevr {

nlohmann::json action_to_json(const RawAction& a);
/// Throws std::invalid_argument with the offending key on malformed input.
RawAction action_from_json(const nlohmann::json& j, int users, int window_len);
nlohmann::json step_to_json(const StepResult& r);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

class Session {
 public:
  Session(EnvConfig cfg, TraceProvider traces);

  /// Handle one request line and return the reply line (no newline).
  std::string handle(std::string_view line);
  bool closed() const { return closed_; }
  const Environment& env() const { return env_; }

 private:
  nlohmann::json dispatch(const nlohmann::json& req);

  Environment env_;
  bool closed_ = false;
};

/// TCP listener; one thread and one Session per connection.
class EnvServer {
 public:
  EnvServer(EnvConfig cfg, TraceProvider traces);
  ~EnvServer();

  /// Bind "host:port" (port 0 picks a free port). Returns the bound port.
  int listen(const std::string& endpoint);
  /// Accept connections until stop() is called.
  void serve();
  void stop();

 private:
  void run_connection(int fd);

  EnvConfig cfg_;
  TraceProvider traces_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::condition_variable idle_;
  int active_ = 0;
  std::vector<int> client_fds_;
};

/// Minimal blocking client used by tests and tools.
class EnvClient {
 public:
  explicit EnvClient(const std::string& endpoint);
  ~EnvClient();
  EnvClient(const EnvClient&) = delete;
  EnvClient& operator=(const EnvClient&) = delete;

  nlohmann::json request(const nlohmann::json& msg);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace edgevr
