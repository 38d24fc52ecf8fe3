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

#include "edgevr/protocol.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace edgevr {

using nlohmann::json;

namespace {

struct ProtocolError : std::runtime_error {
  ProtocolError(std::string kind, const std::string& detail)
      : std::runtime_error(detail), kind(std::move(kind)) {}
  std::string kind;
};

int binary_value(const json& v, const char* key) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d == 0.0) return 0;
    if (d == 1.0) return 1;
  }
  throw std::invalid_argument(std::string("action.") + key + ": entries must be 0 or 1");
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("action: missing key '") + key + "'");
  return *it;
}

void check_array(const json& v, const char* key, std::size_t n) {
  if (!v.is_array()) throw std::invalid_argument(std::string("action.") + key + ": expected an array");
  if (v.size() != n)
    throw std::invalid_argument(std::string("action.") + key + ": expected " + std::to_string(n) +
                                " entries, got " + std::to_string(v.size()));
}

Eigen::MatrixXi binary_matrix(const json& j, const char* key, int users, int window_len) {
  const json& v = field(j, key);
  check_array(v, key, users);
  Eigen::MatrixXi m(users, window_len);
  for (int u = 0; u < users; ++u) {
    check_array(v[u], key, window_len);
    for (int l = 0; l < window_len; ++l) m(u, l) = binary_value(v[u][l], key);
  }
  return m;
}

Eigen::VectorXd weight_vector(const json& j, const char* key, int users) {
  const json& v = field(j, key);
  check_array(v, key, users);
  Eigen::VectorXd w(users);
  for (int u = 0; u < users; ++u) {
    if (!v[u].is_number())
      throw std::invalid_argument(std::string("action.") + key + ": entries must be numbers");
    w[u] = v[u].get<double>();
  }
  return w;
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("send: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Reads one line into `line`; false on EOF with nothing buffered.
bool read_line(int fd, std::string& buffer, std::string& line) {
  for (;;) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return true;
    }
    char chunk[8192];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer.empty()) return false;
      line = std::move(buffer);
      buffer.clear();
      return true;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("endpoint must be host:port, got '" + endpoint + "'");
  std::string host = endpoint.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  return {host, endpoint.substr(colon + 1)};
}

addrinfo* resolve(const std::string& endpoint, bool passive) {
  auto [host, port] = split_endpoint(endpoint);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw std::runtime_error("cannot resolve '" + endpoint + "': " + ::gai_strerror(rc));
  return res;
}

}  // namespace

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json action_to_json(const RawAction& a) {
  auto matrix = [](const Eigen::MatrixXi& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  json zf = json::array();
  for (Eigen::Index i = 0; i < a.zf.size(); ++i) zf.push_back(a.zf[i]);
  return {{"zf", zf},
          {"xb", matrix(a.xb)},
          {"zb", matrix(a.zb)},
          {"wB", vector_to_json(a.w_bandwidth)},
          {"wF", vector_to_json(a.w_gpu)}};
}

RawAction action_from_json(const json& j, int users, int window_len) {
  if (!j.is_object()) throw std::invalid_argument("action: expected an object");
  RawAction a;
  const json& zf = field(j, "zf");
  check_array(zf, "zf", users);
  a.zf.resize(users);
  for (int u = 0; u < users; ++u) a.zf[u] = binary_value(zf[u], "zf");
  a.xb = binary_matrix(j, "xb", users, window_len);
  a.zb = binary_matrix(j, "zb", users, window_len);
  a.w_bandwidth = weight_vector(j, "wB", users);
  a.w_gpu = weight_vector(j, "wF", users);
  return a;
}

json step_to_json(const StepResult& r) {
  json frames = json::array();
  for (const auto& f : r.info.frames) {
    frames.push_back({{"user", f.user},
                      {"frame", f.frame_slot},
                      {"fg_feasible", f.fg_feasible},
                      {"bg_feasible", f.bg_feasible},
                      {"merged", f.merged},
                      {"k_star", f.chosen_bg_sensor_slot},
                      {"age_s", f.age_s}});
  }
  json drops = json::array();
  for (const auto& row : r.info.drops) drops.push_back(row);
  return {{"obs", vector_to_json(r.obs)},
          {"reward", r.reward},
          {"cost", r.cost},
          {"done", r.done},
          {"info",
           {{"frames", frames},
            {"age_s", r.info.age_s},
            {"energy_j", r.info.energy_j},
            {"drops", drops}}}};
}

// ---------------------------------------------------------------------------

Session::Session(EnvConfig cfg, TraceProvider traces) : env_(std::move(cfg), std::move(traces)) {}

std::string Session::handle(std::string_view line) {
  json reply;
  try {
    json req;
    try {
      req = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ProtocolError("parse_error", e.what());
    }
    reply = dispatch(req);
  } catch (const ProtocolError& e) {
    reply = {{"error", e.kind}, {"detail", e.what()}};
  } catch (const std::out_of_range& e) {
    reply = {{"error", "out_of_range"}, {"detail", e.what()}};
  } catch (const std::invalid_argument& e) {
    reply = {{"error", "invalid_argument"}, {"detail", e.what()}};
  } catch (const std::logic_error& e) {
    reply = {{"error", "state_error"}, {"detail", e.what()}};
  } catch (const std::exception& e) {
    reply = {{"error", "internal"}, {"detail", e.what()}};
  }
  return reply.dump();
}

json Session::dispatch(const json& req) {
  if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string())
    throw ProtocolError("bad_request", "message must be an object with a string 'cmd'");
  const std::string cmd = req["cmd"].get<std::string>();
  const auto& cfg = env_.config();

  if (cmd == "spec") {
    const EnvDims d = env_.dims();
    return {{"obs", d.obs},
            {"binary", d.binary},
            {"alloc", d.alloc},
            {"users", cfg.users},
            {"window_len", cfg.window_len},
            {"queue_len", cfg.queue_features},
            {"horizon", cfg.horizon},
            {"aqm_state", cfg.aqm_state},
            {"aqm_reward", cfg.aqm_reward},
            {"cost_limit", cfg.cost_limit}};
  }
  if (cmd == "reset") {
    if (!req.contains("episode") || !req["episode"].is_number_integer())
      throw ProtocolError("bad_request", "reset needs an integer 'episode'");
    std::uint64_t seed = 0;
    if (req.contains("seed")) {
      if (!req["seed"].is_number_integer() || req["seed"].get<std::int64_t>() < 0)
        throw ProtocolError("bad_request", "'seed' must be a non-negative integer");
      seed = req["seed"].get<std::uint64_t>();
    }
    for (const char* flag : {"aqm_state", "aqm_reward"})
      if (req.contains(flag) && !req[flag].is_boolean())
        throw ProtocolError("bad_request", std::string("'") + flag + "' must be a boolean");
    if (req.contains("aqm_state")) env_.set_aqm_state(req["aqm_state"].get<bool>());
    if (req.contains("aqm_reward")) env_.set_aqm_reward(req["aqm_reward"].get<bool>());
    return {{"obs", vector_to_json(env_.reset(req["episode"].get<int>(), seed))}};
  }
  if (cmd == "step") {
    if (!req.contains("action")) throw ProtocolError("bad_request", "step needs an 'action'");
    if (!env_.active()) throw ProtocolError("state_error", "step before reset");
    if (env_.done()) throw ProtocolError("state_error", "episode is done; reset first");
    RawAction a;
    try {
      a = action_from_json(req["action"], cfg.users, cfg.window_len);
    } catch (const std::invalid_argument& e) {
      throw ProtocolError("invalid_action", e.what());
    }
    return step_to_json(env_.step(a));
  }
  if (cmd == "close") {
    closed_ = true;
    return {{"ok", true}};
  }
  throw ProtocolError("unknown_command", "unknown cmd '" + cmd + "'");
}

// ---------------------------------------------------------------------------

EnvServer::EnvServer(EnvConfig cfg, TraceProvider traces)
    : cfg_(std::move(cfg)), traces_(std::move(traces)) {
  cfg_.validate();
}

EnvServer::~EnvServer() { stop(); }

int EnvServer::listen(const std::string& endpoint) {
  addrinfo* res = resolve(endpoint, true);
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw std::runtime_error("cannot listen on '" + endpoint + "': " + std::strerror(errno));
  listen_fd_ = fd;

  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  return ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

void EnvServer::serve() {
  if (listen_fd_ < 0) throw std::logic_error("serve: listen() was not called");
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    ++active_;
    std::thread([this, fd] { run_connection(fd); }).detach();
  }
}

void EnvServer::run_connection(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  std::string buffer, line;
  try {
    Session session(cfg_, traces_);
    while (!session.closed() && read_line(fd, buffer, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      write_all(fd, session.handle(line) + "\n");
    }
  } catch (const std::exception& e) {
    try {
      write_all(fd, json({{"error", "internal"}, {"detail", e.what()}}).dump() + "\n");
    } catch (...) {
    }
  }
  ::shutdown(fd, SHUT_RDWR);
  std::lock_guard lock(mu_);
  std::erase(client_fds_, fd);
  ::close(fd);
  if (--active_ == 0) idle_.notify_all();
}

void EnvServer::stop() {
  std::unique_lock lock(mu_);
  stopping_ = true;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  idle_.wait(lock, [this] { return active_ == 0; });
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

// ---------------------------------------------------------------------------

EnvClient::EnvClient(const std::string& endpoint) {
  addrinfo* res = resolve(endpoint, false);
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw std::runtime_error("cannot connect to '" + endpoint + "'");
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

EnvClient::~EnvClient() {
  if (fd_ >= 0) ::close(fd_);
}

json EnvClient::request(const json& msg) {
  write_all(fd_, msg.dump() + "\n");
  std::string line;
  if (!read_line(fd_, buffer_, line)) throw std::runtime_error("connection closed by server");
  return json::parse(line);
}

}  // namespace edgevr
