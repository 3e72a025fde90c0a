// Local OpenAI-compatible endpoint backed by the heuristic responder.
#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "werewolf/heuristic_model.hpp"

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic fake chat-completions server"};
  std::string host = "127.0.0.1";
  int port = 0;
  std::string prefix = "/v1";
  int fail_first = 0;
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "port, 0 picks a free one");
  app.add_option("--prefix", prefix, "API path prefix");
  app.add_option("--fail-first", fail_first, "answer the first N requests with HTTP 500");
  CLI11_PARSE(app, argc, argv);

  httplib::Server server;
  std::atomic<int> served{0};
  server.Post(prefix + "/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (served++ < fail_first) {
      res.status = 500;
      res.set_content(R"({"error":"warming up"})", "application/json");
      return;
    }
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array() || body["messages"].empty()) {
      res.status = 400;
      res.set_content(R"({"error":"bad request"})", "application/json");
      return;
    }
    const auto prompt = body["messages"].back().value("content", std::string());
    nlohmann::json out = {
        {"id", "fake"},
        {"object", "chat.completion"},
        {"model", body.value("model", std::string("fake"))},
        {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", werewolf::heuristic_reply(prompt)}}},
                      {"finish_reason", "stop"}}}}};
    res.set_content(out.dump(), "application/json");
  });
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });

  if (port == 0) {
    port = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    std::cerr << fmt::format("cannot bind {}:{}\n", host, port);
    return 1;
  }
  if (port <= 0) {
    std::cerr << "cannot bind\n";
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << fmt::format("listening on http://{}:{}{}", host, port, prefix) << std::endl;
  server.listen_after_bind();
  return 0;
}
