// Copyright 2026 The Counterarg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>

#include "httplib.h"

#include "counterarg/error.hpp"
#include "counterarg/survey.hpp"

namespace counterarg::survey {

namespace {

int StatusFor(Errc code) {
  switch (code) {
    case Errc::kNotFound:
    case Errc::kUnknownNonce:
      return 404;
    case Errc::kAlreadyVoted:
    case Errc::kIncompleteStudy:
      return 409;
    case Errc::kSessionClosed:
      return 410;
    case Errc::kIoFailure:
      return 500;
    default:
      return 400;
  }
}

void Reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response& res, const Error& e) {
  Reply(res, StatusFor(e.code()),
        {{"error", ErrcName(e.code())}, {"message", e.what()}});
}

Json ParseBody(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json body = Json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(Errc::kInvalidArgument, "request body must be a JSON object");
  }
  return body;
}

// Wraps a handler so that library errors become JSON error replies.
template <typename Fn>
httplib::Server::Handler Guard(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      ReplyError(res, e);
    } catch (const Json::exception& e) {
      ReplyError(res, Error(Errc::kInvalidArgument, e.what()));
    }
  };
}

Json VoteToJson(const AnnotatorVote& v) {
  // Identity is deliberately left out: the client only ever deals in positions.
  return Json{{"status", "recorded"},
              {"nonce", v.nonce},
              {"item_id", v.item_id},
              {"picked_position", PositionName(v.picked_position)}};
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(SurveyService& s) : service(s) {}
  SurveyService& service;
  httplib::Server server;
  std::atomic<bool> bound{false};
};

HttpServer::HttpServer(SurveyService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  SurveyService& svc = service;

  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  srv.Post("/studies", Guard([&svc](const httplib::Request& req, httplib::Response& res) {
    Json body = ParseBody(req);
    if (!body.contains("items") || !body["items"].is_array()) {
      throw Error(Errc::kInvalidArgument, "items array required");
    }
    std::vector<AnnotationItem> items;
    for (const Json& j : body["items"]) items.push_back(item_from_json(j));
    StudyConfig config;
    config.annotators_per_item = body.value("annotators_per_item", 4);
    config.seed = body.value("seed", std::uint64_t{0});
    std::optional<std::string> id;
    if (body.contains("study_id")) id = body["study_id"].get<std::string>();
    const std::string created = svc.create_study(std::move(items), config, id);
    Reply(res, 201, {{"study_id", created}, {"items", svc.items(created).size()}});
  }));

  srv.Post(R"(/studies/([^/]+)/sessions)",
           Guard([&svc](const httplib::Request& req, httplib::Response& res) {
             Json body = ParseBody(req);
             std::optional<std::string> stance;
             if (body.contains("stance") && body["stance"].is_string()) {
               stance = body["stance"].get<std::string>();
             }
             std::optional<std::uint64_t> seed;
             if (body.contains("seed")) seed = body["seed"].get<std::uint64_t>();
             const std::string id = svc.open_session(
                 req.matches[1].str(), body.value("annotator_id", std::string()), stance,
                 seed);
             Reply(res, 201, {{"session_id", id}});
           }));

  srv.Get(R"(/sessions/([^/]+)/next)",
          Guard([&svc](const httplib::Request& req, httplib::Response& res) {
            try {
              auto [presentation, view] = svc.next_presentation(req.matches[1].str());
              Reply(res, 200, view_to_json(view));
            } catch (const Error& e) {
              if (e.code() != Errc::kExhausted) throw;
              Reply(res, 200, {{"status", "exhausted"}});
            }
          }));

  srv.Post(R"(/sessions/([^/]+)/votes)",
           Guard([&svc](const httplib::Request& req, httplib::Response& res) {
             Json body = ParseBody(req);
             auto position = ParsePosition(body.value("picked_position", std::string()));
             if (!position) {
               throw Error(Errc::kInvalidArgument, "picked_position must be left or right");
             }
             AnnotatorVote vote =
                 svc.submit_vote(req.matches[1].str(), body.value("nonce", std::string()),
                                 *position, body.value("justification", std::string()));
             Reply(res, 200, VoteToJson(vote));
           }));

  srv.Post(R"(/sessions/([^/]+)/close)",
           Guard([&svc](const httplib::Request& req, httplib::Response& res) {
             svc.close_session(req.matches[1].str());
             Reply(res, 200, {{"status", "closed"}});
           }));

  srv.Get(R"(/studies/([^/]+)/tally)",
          Guard([&svc](const httplib::Request& req, httplib::Response& res) {
            Reply(res, 200, study_tally_to_json(svc.tally_study(req.matches[1].str())));
          }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound_port = port;
  if (port == 0) {
    bound_port = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound_port = -1;
  }
  if (bound_port < 0) {
    throw Error(Errc::kIoFailure, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound_port;
}

void HttpServer::listen() {
  if (!impl_->bound) throw Error(Errc::kInvalidArgument, "bind() before listen()");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace counterarg::survey
