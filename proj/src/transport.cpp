#include "bmi/transport.hpp"

#include "bmi/error.hpp"
#include "bmi/util.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>

namespace bmi {

namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) throw NetworkError(sys_error("fcntl"));
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

addrinfo* lookup(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw NetworkError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  return res;
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw UsageError("listen address must be host:port");
  Endpoint e;
  const std::string host(text.substr(0, colon));
  if (!host.empty()) e.host = host;
  const std::string port(text.substr(colon + 1));
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) throw UsageError("bad port '" + port + "'");
  e.port = static_cast<std::uint16_t>(p);
  return e;
}

// ---------------------------------------------------------------------------
// TcpClient

TcpClient::TcpClient(const std::string& host, std::uint16_t port) {
  addrinfo* res = lookup(host, port, false);
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw NetworkError(sys_error("cannot connect to " + host + ":" + std::to_string(port)));
  set_nodelay(fd_);
}

TcpClient::~TcpClient() { close(); }

void TcpClient::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void TcpClient::send(const protocol::json& msg) { send_line(protocol::encode(msg)); }

void TcpClient::send_line(std::string_view line) {
  std::string data(line);
  if (data.empty() || data.back() != '\n') data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(sys_error("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> TcpClient::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(sys_error("poll"));
    }
    if (rc == 0) return std::nullopt;
    char buf[8192];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n == 0) throw NetworkError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw NetworkError(sys_error("recv"));
    }
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

std::optional<protocol::json> TcpClient::receive(std::chrono::milliseconds timeout) {
  auto line = read_line(timeout);
  if (!line) return std::nullopt;
  return protocol::decode(*line);
}

protocol::json TcpClient::expect(std::string_view type, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    auto msg = receive(std::max(left, std::chrono::milliseconds(0)));
    if (!msg) throw NetworkError("timed out waiting for '" + std::string(type) + "'");
    if (msg->at("type") == type) return *msg;
  }
}

// ---------------------------------------------------------------------------
// SessionServer

SessionServer::SessionServer(SessionContext ctx, ServerOptions options)
    : session_(std::move(ctx)), options_(std::move(options)) {}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
  addrinfo* res = lookup(options_.listen.host, options_.listen.port, true);
  std::string last_error = "no usable address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      listen_fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0)
    throw NetworkError("cannot listen on " + options_.listen.host + ":" + std::to_string(options_.listen.port) + ": " +
                       last_error);
  set_nonblocking(listen_fd_);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);

  if (::pipe(wake_pipe_) != 0) throw NetworkError(sys_error("pipe"));
  set_nonblocking(wake_pipe_[0]);
  set_nonblocking(wake_pipe_[1]);

  running_ = true;
  persist_thread_ = std::thread([this] { persist_loop(); });
  sim_thread_ = std::thread([this] { sim_loop(); });
  net_thread_ = std::thread([this] { network_loop(); });
}

void SessionServer::stop() {
  if (!running_.exchange(false)) return;
  wake_network();
  in_cv_.notify_all();
  if (net_thread_.joinable()) net_thread_.join();
  if (sim_thread_.joinable()) sim_thread_.join();
  persist_cv_.notify_all();
  if (persist_thread_.joinable()) persist_thread_.join();
  for (auto& [id, c] : conns_)
    if (c.fd >= 0) ::close(c.fd);
  conns_.clear();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  for (int& fd : wake_pipe_) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
  listen_fd_ = -1;
}

void SessionServer::on_trial(std::function<void(const TrialRecord&)> callback) {
  std::lock_guard lk(persist_mu_);
  callback_ = std::move(callback);
}

std::size_t SessionServer::trials_persisted() const {
  std::lock_guard lk(persist_mu_);
  return persisted_;
}

void SessionServer::wait_for_trials(std::size_t count) {
  std::unique_lock lk(persist_mu_);
  persist_cv_.wait(lk, [&] { return persisted_ >= count || !running_; });
}

void SessionServer::wake_network() {
  if (wake_pipe_[1] < 0) return;
  const char b = 1;
  [[maybe_unused]] const ssize_t n = ::write(wake_pipe_[1], &b, 1);
}

void SessionServer::enqueue(Connection& c, std::string bytes, bool telemetry) {
  if (c.queue.size() >= options_.outbound_capacity) {
    for (auto it = c.queue.begin(); it != c.queue.end(); ++it) {
      if (it->second) {
        c.queue.erase(it);
        break;
      }
    }
    // A queue full of control messages is allowed to grow; telemetry is shed first.
    if (telemetry && c.queue.size() >= options_.outbound_capacity) return;
  }
  c.queue.emplace_back(std::move(bytes), telemetry);
}

void SessionServer::dispatch(std::vector<Outbound>&& out) {
  if (out.empty()) return;
  const std::vector<ClientId> everyone = session_.greeted_clients();
  {
    std::lock_guard lk(out_mu_);
    for (auto& o : out) {
      const std::string bytes = protocol::encode(o.message);
      if (o.to) {
        if (auto it = conns_.find(*o.to); it != conns_.end()) enqueue(it->second, bytes, o.telemetry);
      } else {
        for (ClientId id : everyone)
          if (auto it = conns_.find(id); it != conns_.end()) enqueue(it->second, bytes, o.telemetry);
      }
    }
  }
  wake_network();
}

void SessionServer::network_loop() {
  std::vector<pollfd> fds;
  std::vector<ClientId> ids;
  while (running_) {
    bool accept_input;
    {
      std::lock_guard lk(in_mu_);
      accept_input = inbound_.size() < options_.inbound_capacity;
    }
    fds.clear();
    ids.clear();
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    fds.push_back({listen_fd_, static_cast<short>(accept_input ? POLLIN : 0), 0});
    {
      std::lock_guard lk(out_mu_);
      for (auto& [id, c] : conns_) {
        short ev = accept_input && !c.closing ? POLLIN : 0;
        if (!c.out.empty() || !c.queue.empty()) ev |= POLLOUT;
        fds.push_back({c.fd, ev, 0});
        ids.push_back(id);
      }
    }
    const int rc = ::poll(fds.data(), fds.size(), 200);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[0].revents & POLLIN) {
      char buf[256];
      while (::read(wake_pipe_[0], buf, sizeof buf) > 0) {
      }
    }

    std::vector<Event> events;
    if (fds[1].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        set_nonblocking(fd);
        set_nodelay(fd);
        std::lock_guard lk(out_mu_);
        const ClientId id = next_id_++;
        conns_[id].fd = fd;
        events.push_back({Event::Kind::Connect, id, {}});
      }
    }

    {
      std::lock_guard lk(out_mu_);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = conns_.find(ids[i]);
        if (it == conns_.end()) continue;
        Connection& c = it->second;
        const short rev = fds[i + 2].revents;
        bool dead = (rev & (POLLERR | POLLNVAL)) != 0;

        if (!dead && (rev & (POLLIN | POLLHUP))) {
          char buf[8192];
          const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
          if (n == 0) dead = true;
          else if (n < 0 && errno != EAGAIN && errno != EINTR) dead = true;
          else if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = c.in.find('\n')) != std::string::npos) {
              events.push_back({Event::Kind::Line, ids[i], c.in.substr(0, nl)});
              c.in.erase(0, nl + 1);
            }
            if (c.in.size() > options_.max_line) {
              // The truncated prefix never parses, so the session reports it as malformed.
              events.push_back({Event::Kind::Line, ids[i], c.in.substr(0, 64)});
              c.in.clear();
            }
          }
        }

        while (!dead && (rev & POLLOUT)) {
          if (c.out.empty()) {
            if (c.queue.empty()) break;
            c.out = std::move(c.queue.front().first);
            c.queue.pop_front();
          }
          const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
          if (n < 0) {
            if (errno != EAGAIN && errno != EINTR) dead = true;
            break;
          }
          c.out.erase(0, static_cast<std::size_t>(n));
          if (!c.out.empty()) break;
        }

        if (dead) {
          ::close(c.fd);
          conns_.erase(it);
          events.push_back({Event::Kind::Disconnect, ids[i], {}});
        }
      }
    }

    if (!events.empty()) {
      {
        std::lock_guard lk(in_mu_);
        for (auto& e : events) inbound_.push_back(std::move(e));
      }
      in_cv_.notify_one();
    }
  }
}

void SessionServer::sim_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(session_.dt()));
  auto next_tick = clock::now() + period;

  while (running_) {
    std::deque<Event> batch;
    {
      std::unique_lock lk(in_mu_);
      auto ready = [&] { return !inbound_.empty() || !running_; };
      if (session_.free_running()) in_cv_.wait_until(lk, next_tick, ready);
      else in_cv_.wait_for(lk, std::chrono::milliseconds(200), ready);
      batch.swap(inbound_);
    }
    if (!running_) break;
    if (!batch.empty()) wake_network();  // room in the inbound FIFO again

    for (auto& e : batch) {
      const bool was_free = session_.free_running();
      switch (e.kind) {
        case Event::Kind::Connect: dispatch(session_.on_connect(e.client)); break;
        case Event::Kind::Line: dispatch(session_.on_line(e.client, e.line)); break;
        case Event::Kind::Disconnect: dispatch(session_.on_disconnect(e.client)); break;
      }
      if (!was_free && session_.free_running()) next_tick = clock::now() + period;
    }

    if (session_.free_running() && clock::now() >= next_tick) {
      dispatch(session_.on_timer());
      next_tick += period;
      // After a long stall, resume the tick cadence instead of bursting.
      if (clock::now() > next_tick + 10 * period) next_tick = clock::now() + period;
    }

    auto done = session_.take_completed();
    if (!done.empty()) {
      {
        std::lock_guard lk(persist_mu_);
        for (auto& r : done) to_persist_.push_back(std::move(r));
      }
      persist_cv_.notify_all();
    }
  }
}

void SessionServer::persist_loop() {
  const std::string out_dir = session_.context().config.out_dir;
  for (;;) {
    TrialRecord rec;
    std::function<void(const TrialRecord&)> cb;
    {
      std::unique_lock lk(persist_mu_);
      persist_cv_.wait(lk, [&] { return !to_persist_.empty() || !running_; });
      if (to_persist_.empty()) return;
      rec = std::move(to_persist_.front());
      to_persist_.pop_front();
      cb = callback_;
    }
    if (!out_dir.empty()) {
      try {
        write_trial((std::filesystem::path(out_dir) / (rec.trial_id + ".btrial")).string(), rec);
      } catch (const Error& e) {
        // The record stays absent rather than partial; the session continues.
        std::fprintf(stderr, "bmi: could not persist %s: %s\n", rec.trial_id.c_str(), e.what());
      }
    }
    if (cb) cb(rec);
    {
      std::lock_guard lk(persist_mu_);
      ++persisted_;
    }
    persist_cv_.notify_all();
  }
}

}  // namespace bmi
