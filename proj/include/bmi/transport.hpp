#pragma once

// TCP transport for the session protocol.
//
// SessionServer hosts one Session with two worker threads: a network thread
// multiplexing sockets with poll(), and a simulation thread that owns the
// Session and ticks free-running trials at 1/dt. The two exchange events via
// a bounded inbound FIFO (the network thread stops reading sockets while it is
// full) and bounded per-client outbound queues that shed the oldest telemetry
// first and never shed control messages. Completed trials are written by a
// third thread so persistence stays off the tick path.

#include "bmi/protocol.hpp"
#include "bmi/session.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace bmi {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks an ephemeral port
};

/// Parse "host:port" or ":port".
Endpoint parse_endpoint(std::string_view text);

/// Blocking line-oriented client connection.
class TcpClient {
 public:
  TcpClient(const std::string& host, std::uint16_t port);
  ~TcpClient();
  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;

  void send(const protocol::json& msg);
  void send_line(std::string_view line);
  /// Next complete line, or nullopt on timeout. Throws NetworkError when the
  /// peer closes the connection.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);
  /// Next decoded message, or nullopt on timeout.
  std::optional<protocol::json> receive(std::chrono::milliseconds timeout);
  /// Read until a message of the given type arrives.
  protocol::json expect(std::string_view type, std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::string buffer_;
};

struct ServerOptions {
  Endpoint listen;
  std::size_t inbound_capacity = 4096;
  std::size_t outbound_capacity = 2048;  // messages per client
  std::size_t max_line = 1 << 16;        // longer lines are rejected as malformed
};

class SessionServer {
 public:
  SessionServer(SessionContext ctx, ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Bind and start the worker threads. Throws NetworkError on bind failure.
  void start();
  /// Stop accepting, flush pending persistence, and join the threads.
  void stop();
  std::uint16_t port() const { return port_; }

  /// Block until `count` trials have been persisted or the server stops.
  void wait_for_trials(std::size_t count);
  std::size_t trials_persisted() const;
  /// Called (on the persistence thread) with each completed record.
  void on_trial(std::function<void(const TrialRecord&)> callback);

 private:
  struct Event {
    enum class Kind { Connect, Line, Disconnect } kind;
    ClientId client;
    std::string line;
  };
  struct Connection {
    int fd = -1;
    std::string in;
    std::string out;  // bytes of the message currently being written
    std::deque<std::pair<std::string, bool>> queue;  // (encoded, telemetry)
    bool closing = false;
  };

  void network_loop();
  void sim_loop();
  void persist_loop();
  void wake_network();
  void dispatch(std::vector<Outbound>&& out);
  void enqueue(Connection& c, std::string bytes, bool telemetry);

  Session session_;
  ServerOptions options_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};

  std::mutex in_mu_;
  std::condition_variable in_cv_;
  std::deque<Event> inbound_;

  std::mutex out_mu_;
  std::map<ClientId, Connection> conns_;
  ClientId next_id_ = 1;

  mutable std::mutex persist_mu_;
  std::condition_variable persist_cv_;
  std::deque<TrialRecord> to_persist_;
  std::size_t persisted_ = 0;
  std::function<void(const TrialRecord&)> callback_;

  std::thread net_thread_, sim_thread_, persist_thread_;
};

}  // namespace bmi
