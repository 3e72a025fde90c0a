#include <doctest.h>

#include <sys/socket.h>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <filesystem>
#include <fstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <httplib.h>

#include "support.hpp"
#include "werewolf/console.hpp"

using namespace werewolf;
using namespace werewolf::console;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {
class WsClient {
 public:
  WsClient(unsigned short port, const std::string& target) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    timeval tv{5, 0};
    ::setsockopt(ws_.next_layer().native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ws_.handshake("127.0.0.1", target);
  }
  ~WsClient() {
    beast::error_code ignored;
    ws_.close(websocket::close_code::normal, ignored);
  }
  nlohmann::json read() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    return nlohmann::json::parse(beast::buffers_to_string(buffer.data()));
  }
  nlohmann::json read_type(const std::string& type) {
    for (;;) {
      auto f = read();
      if (f.at("type") == type) return f;
    }
  }
  void send(const nlohmann::json& frame) { ws_.write(net::buffer(frame.dump())); }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_{ioc_};
};

ActionRequest vote_request() {
  ActionRequest r;
  r.kind = RequestKind::Vote;
  r.round = 1;
  r.player = PlayerId{2};
  r.options = {PlayerId{1}, PlayerId{3}};
  r.abstain_allowed = true;
  r.prompt = "prompt text";
  return r;
}

struct Fixture {
  std::shared_ptr<SessionRegistry> registry = std::make_shared<SessionRegistry>();
  std::filesystem::path root;
  std::unique_ptr<ConsoleServer> server;
  Fixture() {
    root = std::filesystem::temp_directory_path() / ("werewolf-console-" + std::to_string(::getpid()));
    std::filesystem::create_directories(root);
    std::ofstream(root / "index.html") << "<html>console</html>";
    std::ofstream(root / "app.js") << "console.log(1);";
    server = std::make_unique<ConsoleServer>(registry, ServerOptions{"127.0.0.1", 0, root});
    server->start();
  }
  ~Fixture() {
    server->stop();
    std::filesystem::remove_all(root);
  }
  unsigned short port() const { return server->port(); }
};

// Answers every open request on `channel` with its template document.
std::thread auto_responder(std::shared_ptr<SeatChannel> channel, std::atomic<bool>& stop) {
  return std::thread([channel, &stop] {
    while (!stop && !channel->closed()) {
      if (auto id = channel->open_request()) {
        for (const auto& f : channel->backlog()) {
          if (f.at("type") == "request" && f.value("request_id", "") == *id) {
            auto doc = nlohmann::json::parse(f.at("payload").at("template").get<std::string>());
            if (doc.contains("statement")) doc["statement"] = "I am listening.";
            channel->submit(*id, {{"document", doc}});
            break;
          }
        }
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  });
}
}  // namespace

TEST_SUITE("console") {
  TEST_CASE("frames and paths") {
    auto f = make_frame("event", {{"a", 1}}, std::string("r1"));
    CHECK(f["type"] == "event");
    CHECK(f["request_id"] == "r1");
    CHECK_FALSE(make_frame("pong", {}).contains("request_id"));
    CHECK(parse_session_path("/session/abc-1/seat/3") == std::make_pair(std::string("abc-1"), 3));
    CHECK_FALSE(parse_session_path("/session/abc/seat/x"));
    CHECK_FALSE(parse_session_path("/other"));
    CHECK(display_class(ObservationKind::Statement, true) == "own");
    CHECK(display_class(ObservationKind::Statement, false) == "peer");
    CHECK(display_class(ObservationKind::NightResult, false) == "alert");
  }

  TEST_CASE("request payloads carry a parseable template") {
    for (auto kind : {RequestKind::Vote, RequestKind::NightKill, RequestKind::Statement, RequestKind::Reason,
                      RequestKind::OrderChoice, RequestKind::SheriffVote}) {
      ActionRequest r = vote_request();
      r.kind = kind;
      r.target = PlayerId{3};
      r.left_neighbor = PlayerId{1};
      r.right_neighbor = PlayerId{3};
      r.candidates = {PlayerId{1}, PlayerId{3}};
      r.abstain_allowed = is_vote_kind(kind);
      auto p = request_payload(r);
      CAPTURE(to_string(kind));
      CHECK(p["kind"] == nlohmann::json(kind));
      if (kind != RequestKind::Statement) CHECK(parse_response(p["template"].get<std::string>(), r).valid());
    }
  }

  TEST_CASE("channel: first valid submission wins") {
    auto ch = std::make_shared<SeatChannel>("s", PlayerId{2});
    std::optional<std::string> got;
    std::thread engine([&] { got = ch->await_response(vote_request(), std::chrono::seconds(5)); });
    while (!ch->open_request()) std::this_thread::yield();
    const auto id = *ch->open_request();
    CHECK(ch->submit(id, {{"document", "not json"}})["type"] == "error");
    CHECK(ch->open_request() == id);
    CHECK(ch->submit("r999", {{"document", R"({"action":"player_1"})"}})["payload"]["reason"] == "stale request");
    CHECK(ch->submit(id, {{"nothing", 1}})["payload"]["reason"] == "missing document");
    CHECK(ch->submit(id, {{"document", {{"action", "player_2"}}}})["type"] == "error");
    auto ack = ch->submit(id, {{"document", {{"action", "player_3"}}}});
    CHECK(ack["type"] == "ack");
    CHECK(ch->submit(id, {{"document", {{"action", "player_1"}}}})["type"] == "error");
    engine.join();
    REQUIRE(got);
    CHECK(parse_response(*got, vote_request()).response->choice == PlayerId{3});
    CHECK(ch->backlog().back()["type"] == "closed");
  }

  TEST_CASE("channel: timeout and close") {
    auto ch = std::make_shared<SeatChannel>("s", PlayerId{1});
    HumanAgent agent(ch, std::chrono::milliseconds(20));
    auto reply = agent.respond(vote_request());
    CHECK_FALSE(reply.text);
    CHECK(reply.error == "human response timed out");
    CHECK(ch->backlog().back()["payload"]["reason"] == "timeout");
    ch->close("game over");
    CHECK(ch->closed());
    CHECK(ch->backlog().back()["type"] == "notice");
    CHECK(ch->backlog().back()["payload"]["terminal"] == true);
    CHECK_FALSE(agent.respond(vote_request()).text);
    CHECK(ch->submit("r1", {{"document", "{}"}})["payload"]["reason"] == "session closed");
  }

  TEST_CASE("static files over http") {
    Fixture fx;
    httplib::Client http("127.0.0.1", fx.port());
    auto index = http.Get("/");
    REQUIRE(index);
    CHECK(index->status == 200);
    CHECK(index->body == "<html>console</html>");
    CHECK(index->get_header_value("Content-Type").starts_with("text/html"));
    auto js = http.Get("/app.js?v=1");
    REQUIRE(js);
    CHECK(js->get_header_value("Content-Type") == "text/javascript");
    CHECK(http.Get("/missing.css")->status == 404);
    CHECK(http.Get("/../etc/passwd")->status >= 400);
    CHECK(http.Post("/", "x", "text/plain")->status == 405);
  }

  TEST_CASE("unknown session is refused") {
    Fixture fx;
    fx.registry->open("known", PlayerId{1});
    CHECK_THROWS(WsClient(fx.port(), "/session/unknown/seat/1"));
    CHECK_THROWS(WsClient(fx.port(), "/session/known/seat/2"));
    CHECK_THROWS(WsClient(fx.port(), "/elsewhere"));
  }

  TEST_CASE("websocket: hello, backlog, ping and bad frames") {
    Fixture fx;
    auto ch = fx.registry->open("s1", PlayerId{4});
    ch->push(make_frame("event", {{"text", "one"}}));
    ch->push(make_frame("event", {{"text", "two"}}));
    WsClient c(fx.port(), "/session/s1/seat/4");
    auto hello = c.read();
    CHECK(hello["type"] == "hello");
    CHECK(hello["payload"]["version"] == kProtocolVersion);
    CHECK(hello["payload"]["seat"] == "player_4");
    CHECK(c.read()["payload"]["text"] == "one");
    CHECK(c.read()["payload"]["text"] == "two");
    c.send({{"type", "ping"}});
    CHECK(c.read()["type"] == "pong");
    c.send({{"type", "dance"}});
    CHECK(c.read()["type"] == "error");
    ch->push(make_frame("event", {{"text", "live"}}));
    CHECK(c.read()["payload"]["text"] == "live");
  }

  TEST_CASE("websocket: two clients, one answer, reconnect replays") {
    Fixture fx;
    auto ch = fx.registry->open("s2", PlayerId{2});
    std::optional<std::string> got;
    std::thread engine([&] { got = ch->await_response(vote_request(), std::chrono::seconds(10)); });

    WsClient a(fx.port(), "/session/s2/seat/2");
    WsClient b(fx.port(), "/session/s2/seat/2");
    auto ra = a.read_type("request");
    auto rb = b.read_type("request");
    const auto id = ra["request_id"].get<std::string>();
    CHECK(rb["request_id"] == id);
    CHECK(ra["payload"]["options"] == nlohmann::json::array({"player_1", "player_3"}));

    a.send({{"type", "submit"}, {"request_id", id}, {"payload", {{"document", "garbage"}}}});
    CHECK(a.read_type("error")["request_id"] == id);
    CHECK(ch->open_request() == id);

    b.send({{"type", "submit"}, {"request_id", id}, {"payload", {{"document", R"({"action":"player_1"})"}}}});
    const auto ack = b.read_type("ack");
    CHECK(ack["payload"]["response"]["choice"] == 1);
    CHECK(a.read_type("closed")["request_id"] == id);

    a.send({{"type", "submit"}, {"request_id", id}, {"payload", {{"document", R"({"action":"player_3"})"}}}});
    CHECK(a.read_type("error")["payload"]["reason"] == "stale request");
    engine.join();
    REQUIRE(got);
    CHECK(parse_response(*got, vote_request()).response->choice == PlayerId{1});

    WsClient again(fx.port(), "/session/s2/seat/2");
    CHECK(again.read()["type"] == "hello");
    CHECK(again.read_type("request")["request_id"] == id);
    CHECK(again.read_type("closed")["request_id"] == id);
  }

  TEST_CASE("a human seat only sees its own information") {
    int requests = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto cfg = testkit::scripted_config(seed, SheriffMode::Election);
      cfg.human_seat = PlayerId{3};
      cfg.stop_on_human_death = true;
      auto ch = std::make_shared<SeatChannel>("g", PlayerId{3});
      auto human = std::make_shared<HumanAgent>(ch, std::chrono::seconds(5));
      AgentSet set = AgentSet::uniform(std::make_shared<ScriptedAgent>(testkit::varied_policy()));
      set.seats[PlayerId{3}] = human;

      std::atomic<bool> stop{false};
      auto responder = auto_responder(ch, stop);
      Game game(cfg);
      MemorySink sink;
      auto result = game.run(set, sink);
      ch->close("done");
      stop = true;
      responder.join();

      CAPTURE(seed);
      CHECK(result.log.outcome());
      std::set<std::string> own_facts;
      for (const auto& f : game.ledger(PlayerId{3}).facts()) own_facts.insert(f.text);
      for (const auto& f : ch->backlog()) {
        if (f["type"] == "request") {
          ++requests;
          CHECK(f["payload"]["player"] == "player_3");
          auto lower = f["payload"]["prompt"].get<std::string>();
          std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
          CHECK(lower.find("pseudo") == std::string::npos);
        }
        if (f["type"] == "event" && f["payload"]["kind"] == "private") {
          CHECK(own_facts.contains(f["payload"]["text"].get<std::string>()));
        }
      }
      for (const auto* e : result.log.of_type("agent_output")) {
        if (e->payload.at("player") == 3) CHECK(e->payload.at("response").at("fallback") == false);
      }
    }
    CHECK(requests > 0);
  }
}
