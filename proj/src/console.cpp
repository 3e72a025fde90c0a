#include "werewolf/console.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

namespace werewolf::console {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

nlohmann::json make_frame(std::string type, nlohmann::json payload, std::optional<std::string> request_id) {
  nlohmann::json f = {{"type", std::move(type)}, {"payload", std::move(payload)}};
  if (request_id) f["request_id"] = *request_id;
  return f;
}

std::string display_class(ObservationKind kind, bool own) {
  switch (kind) {
    case ObservationKind::NightResult:
    case ObservationKind::VoteResult: return "alert";
    case ObservationKind::Statement: return own ? "own" : "peer";
    case ObservationKind::System:
    case ObservationKind::Private: return "system";
  }
  return "system";
}

std::string template_document(const ActionRequest& request) {
  AgentResponse r;
  r.kind = request.kind;
  if (request.kind == RequestKind::Reason) {
    r.reason = ReasonResult{RoleGuess::Uncertain, kMinConfidence, "", {}};
  } else if (request.kind == RequestKind::OrderChoice) {
    r.choice = request.right_neighbor;
  } else if (request.kind == RequestKind::SheriffVote) {
    if (!request.candidates.empty()) r.choice = request.candidates.front();
  } else if (is_choice_kind(request.kind) && !request.abstain_allowed && !request.options.empty()) {
    r.choice = request.options.front();
  }
  return response_document(request, r);
}

nlohmann::json request_payload(const ActionRequest& request) {
  auto ids = [](const PlayerList& list) {
    auto a = nlohmann::json::array();
    for (auto p : list) a.push_back(player_name(p));
    return a;
  };
  nlohmann::json p = {{"kind", request.kind},
                      {"round", request.round},
                      {"player", player_name(request.player)},
                      {"role", to_string(request.role)},
                      {"options", ids(request.options)},
                      {"abstain_allowed", request.abstain_allowed},
                      {"prompt", request.prompt},
                      {"template", template_document(request)}};
  if (request.target) p["target"] = player_name(*request.target);
  if (!request.candidates.empty()) p["candidates"] = ids(request.candidates);
  if (request.left_neighbor) p["left"] = player_name(*request.left_neighbor);
  if (request.right_neighbor) p["right"] = player_name(*request.right_neighbor);
  if (request.sheriff) p["sheriff"] = player_name(*request.sheriff);
  return p;
}

// --- SeatChannel ---

SeatChannel::SeatChannel(std::string session, PlayerId seat) : session_(std::move(session)), seat_(seat) {}

int SeatChannel::subscribe(Listener listener) {
  std::lock_guard lock(mutex_);
  for (const auto& f : backlog_) listener(f);
  const int id = next_listener_++;
  listeners_[id] = std::move(listener);
  return id;
}

void SeatChannel::unsubscribe(int id) {
  std::lock_guard lock(mutex_);
  listeners_.erase(id);
}

std::vector<nlohmann::json> SeatChannel::backlog() const {
  std::lock_guard lock(mutex_);
  return backlog_;
}

void SeatChannel::push(nlohmann::json frame) {
  std::lock_guard lock(mutex_);
  push_locked(std::move(frame));
}

void SeatChannel::push_locked(nlohmann::json frame) {
  frame["seq"] = backlog_.size() + 1;
  backlog_.push_back(frame);
  for (auto& [id, l] : listeners_) l(frame);
}

nlohmann::json SeatChannel::submit(const std::string& request_id, const nlohmann::json& payload) {
  std::lock_guard lock(mutex_);
  auto error = [&](std::string reason) { return make_frame("error", {{"reason", std::move(reason)}}, request_id); };
  if (closed_) return error("session closed");
  if (!open_id_ || *open_id_ != request_id) return error("stale request");
  if (!payload.is_object() || !payload.contains("document")) return error("missing document");
  const auto& d = payload["document"];
  std::string doc;
  if (d.is_string()) {
    doc = d.get<std::string>();
  } else if (d.is_object()) {
    doc = d.dump();
  } else {
    return error("document must be a JSON object or string");
  }
  auto parsed = parse_response(doc, *open_);
  if (!parsed.valid()) return error(parsed.error);
  accepted_ = doc;
  push_locked(make_frame("closed", {{"response", parsed.response->to_json()}}, request_id));
  open_id_.reset();
  open_.reset();
  cv_.notify_all();
  return make_frame("ack", {{"response", parsed.response->to_json()}}, request_id);
}

std::optional<std::string> SeatChannel::await_response(const ActionRequest& request,
                                                       std::optional<std::chrono::milliseconds> timeout) {
  std::unique_lock lock(mutex_);
  if (closed_) return std::nullopt;
  const auto id = fmt::format("r{}", next_request_++);
  open_id_ = id;
  open_ = request;
  accepted_.reset();
  push_locked(make_frame("request", request_payload(request), id));
  auto done = [&] { return accepted_.has_value() || closed_; };
  if (timeout) {
    cv_.wait_for(lock, *timeout, done);
  } else {
    cv_.wait(lock, done);
  }
  if (!accepted_) {
    if (open_id_ == id) {
      push_locked(make_frame("closed", {{"response", nullptr}, {"reason", closed_ ? "session closed" : "timeout"}}, id));
      open_id_.reset();
      open_.reset();
    }
    return std::nullopt;
  }
  auto out = std::move(*accepted_);
  accepted_.reset();
  return out;
}

std::optional<std::string> SeatChannel::open_request() const {
  std::lock_guard lock(mutex_);
  return open_id_;
}

void SeatChannel::close(const std::string& reason) {
  std::lock_guard lock(mutex_);
  if (closed_) return;
  closed_ = true;
  push_locked(make_frame("notice", {{"terminal", true}, {"text", reason}}));
  cv_.notify_all();
}

bool SeatChannel::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

// --- HumanAgent ---

HumanAgent::HumanAgent(std::shared_ptr<SeatChannel> channel, std::optional<std::chrono::milliseconds> timeout)
    : channel_(std::move(channel)), timeout_(timeout) {}

RawReply HumanAgent::respond(const ActionRequest& request) {
  auto doc = channel_->await_response(request, timeout_);
  if (!doc) return RawReply{std::nullopt, channel_->closed() ? "human seat closed" : "human response timed out"};
  return RawReply{std::move(doc), ""};
}

void HumanAgent::observe(PlayerId seat, const Observation& o) {
  nlohmann::json p = {{"round", o.round},
                      {"kind", o.kind},
                      {"text", o.text},
                      {"display", display_class(o.kind, o.speaker && *o.speaker == seat)}};
  if (o.speaker) p["speaker"] = player_name(*o.speaker);
  channel_->push(make_frame("event", std::move(p)));
}

// --- SessionRegistry ---

std::shared_ptr<SeatChannel> SessionRegistry::open(const std::string& session, PlayerId seat) {
  std::lock_guard lock(mutex_);
  auto& slot = seats_[{session, seat.value}];
  if (!slot) slot = std::make_shared<SeatChannel>(session, seat);
  return slot;
}

std::shared_ptr<SeatChannel> SessionRegistry::find(const std::string& session, int seat) const {
  std::lock_guard lock(mutex_);
  auto it = seats_.find({session, seat});
  return it == seats_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionRegistry::sessions() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [key, ch] : seats_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

std::optional<std::pair<std::string, int>> parse_session_path(std::string_view target) {
  static const std::regex re(R"(^/session/([A-Za-z0-9_.\-]+)/seat/([0-9]{1,3})/?(\?.*)?$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(target.begin(), target.end(), m, re)) return std::nullopt;
  return std::make_pair(m[1].str(), std::stoi(m[2].str()));
}

// --- server ---

namespace {

std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".map") return "application/json";
  return "application/octet-stream";
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::shared_ptr<SeatChannel> channel)
      : ws_(std::move(socket)), channel_(std::move(channel)) {}

  ~WsSession() {
    if (listener_) channel_->unsubscribe(listener_);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    send(make_frame("hello", {{"version", kProtocolVersion},
                              {"session", channel_->session()},
                              {"seat", player_name(channel_->seat())}})
             .dump());
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto exec = ws_.get_executor();
    listener_ = channel_->subscribe([weak, exec](const nlohmann::json& frame) {
      net::post(exec, [weak, text = frame.dump()] {
        if (auto self = weak.lock()) self->send(text);
      });
    });
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      if (listener_) channel_->unsubscribe(listener_);
      listener_ = 0;
      return;
    }
    const auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      send(make_frame("error", {{"reason", "malformed frame"}}).dump());
    } else if (j["type"] == "submit") {
      const auto id = j.value("request_id", std::string());
      send(channel_->submit(id, j.value("payload", nlohmann::json::object())).dump());
    } else if (j["type"] == "ping") {
      send(make_frame("pong", nlohmann::json::object()).dump());
    } else {
      send(make_frame("error", {{"reason", fmt::format("unknown frame type {}", j["type"].get<std::string>())}})
               .dump());
    }
    read();
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<SeatChannel> channel_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  int listener_ = 0;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, std::shared_ptr<SessionRegistry> registry, std::filesystem::path root)
      : stream_(std::move(socket)), registry_(std::move(registry)), root_(std::move(root)) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

 private:
  void on_read(beast::error_code ec) {
    if (ec) return;
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      auto where = parse_session_path(target);
      auto channel = where ? registry_->find(where->first, where->second) : nullptr;
      if (!channel) return reply(http::status::not_found, "unknown session or seat\n", "text/plain");
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), channel)->run(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      return reply(http::status::method_not_allowed, "method not allowed\n", "text/plain");
    }
    serve_static(target);
  }

  void serve_static(std::string target) {
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos) {
      return reply(http::status::bad_request, "bad path\n", "text/plain");
    }
    if (target.back() == '/') target += "index.html";
    if (root_.empty()) return reply(http::status::not_found, "no static root configured\n", "text/plain");
    const auto path = root_ / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (!in || std::filesystem::is_directory(path)) return reply(http::status::not_found, "not found\n", "text/plain");
    std::ostringstream body;
    body << in.rdbuf();
    reply(http::status::ok, body.str(), mime_type(path));
  }

  void reply(http::status status, std::string body, std::string_view type) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "werewolf-console");
    res->set(http::field::content_type, std::string(type));
    res->keep_alive(false);
    res->body() = req_.method() == http::verb::head ? std::string() : std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<SessionRegistry> registry_;
  std::filesystem::path root_;
};

}  // namespace

struct ConsoleServer::Impl {
  std::shared_ptr<SessionRegistry> registry;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  bool running = false;

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), registry, options.static_root)->run();
      }
      accept();
    });
  }
};

ConsoleServer::ConsoleServer(std::shared_ptr<SessionRegistry> registry, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->registry = std::move(registry);
  impl_->options = std::move(options);
}

ConsoleServer::~ConsoleServer() { stop(); }

void ConsoleServer::start() {
  if (impl_->running) return;
  auto& a = impl_->acceptor;
  const tcp::endpoint endpoint(net::ip::make_address(impl_->options.host), impl_->options.port);
  a.open(endpoint.protocol());
  a.set_option(net::socket_base::reuse_address(true));
  a.bind(endpoint);
  a.listen(net::socket_base::max_listen_connections);
  impl_->accept();
  impl_->running = true;
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void ConsoleServer::stop() {
  if (!impl_ || !impl_->running) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->running = false;
}

unsigned short ConsoleServer::port() const {
  return impl_->acceptor.is_open() ? impl_->acceptor.local_endpoint().port() : impl_->options.port;
}

}  // namespace werewolf::console
