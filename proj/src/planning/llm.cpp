// Copyright 2026 The hoisynth Authors
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

#include "hoisynth/planning/planning.h"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace hoisynth::planning {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
    --end;
  }
  return s.substr(begin, end - begin);
}

// Canonical vocabulary token: word runs joined by underscores, so
// "Left Hand" and " box." both normalize cleanly.
std::string normalize_token(const std::string& s) {
  std::string out;
  for (const std::string& word : tokenize_words(s)) {
    if (!out.empty()) out += "_";
    out += word;
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const std::string& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

std::string build_user_message(const PromptTemplate& tmpl,
                               const std::string& text) {
  std::ostringstream msg;
  msg << "Questions:\n";
  for (size_t i = 0; i < tmpl.question_forms.size(); ++i) {
    msg << (i + 1) << ". " << tmpl.question_forms[i] << "\n";
  }
  for (const auto& shot : tmpl.few_shot_examples) {
    msg << "\nInput: " << shot.input << "\n"
        << "Object: " << shot.answers[0] << "\n"
        << "Parts: " << shot.answers[1] << "\n"
        << "Standardized: " << shot.answers[2] << "\n";
  }
  msg << "\nInput: " << text << "\n"
      << "Answer with exactly three lines labeled 'Object:', 'Parts:', and "
         "'Standardized:'.";
  return msg.str();
}

std::string make_request(const LlmEndpoint& endpoint,
                         const PromptTemplate& tmpl,
                         const std::string& user_message) {
  json j;
  j["model"] = endpoint.model;
  j["temperature"] = 0.0;
  j["messages"] = json::array(
      {json{{"role", "system"}, {"content", tmpl.system_preamble}},
       json{{"role", "user"}, {"content", user_message}}});
  return j.dump();
}

std::string send_with_retries(LlmTransport& transport,
                              const LlmEndpoint& endpoint,
                              const std::string& request_json) {
  const int attempts = 1 + endpoint.max_retries;
  std::string last_error;
  for (int i = 0; i < attempts; ++i) {
    try {
      return transport.complete(endpoint, request_json);
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error("plan_llm: transport error after " +
                           std::to_string(attempts) +
                           " attempts: " + last_error);
}

// Parses a chat-completion response body into a validated Plan; on any
// failure records the reason and returns nullopt so the caller can
// reprompt.
std::optional<Plan> try_parse(const std::string& body, const Lexicon& vocab,
                              std::string* why) {
  std::string content;
  try {
    const json j = json::parse(body);
    content = j.at("choices").at(0).at("message").at("content")
                  .get<std::string>();
  } catch (const std::exception& e) {
    *why = std::string("unparseable response body: ") + e.what();
    return std::nullopt;
  }
  std::string object_line, parts_line, standardized_line;
  std::vector<std::string> matched;
  std::istringstream stream(content);
  std::string line;
  while (std::getline(stream, line)) {
    const std::string t = trim(line);
    const std::string lower = to_lower_copy(t);
    if (lower.rfind("object:", 0) == 0) {
      object_line = trim(t.substr(7));
      matched.push_back(t);
    } else if (lower.rfind("parts:", 0) == 0) {
      parts_line = trim(t.substr(6));
      matched.push_back(t);
    } else if (lower.rfind("standardized:", 0) == 0) {
      standardized_line = trim(t.substr(13));
      matched.push_back(t);
    }
  }
  if (object_line.empty() || parts_line.empty() || standardized_line.empty()) {
    *why = "missing labeled Object/Parts/Standardized lines";
    return std::nullopt;
  }
  Plan plan;
  plan.object_category = normalize_token(object_line);
  std::string piece;
  std::istringstream parts_stream(parts_line);
  while (std::getline(parts_stream, piece, ',')) {
    const std::string part = normalize_token(piece);
    if (!part.empty()) plan.contact_parts.push_back(part);
  }
  plan.standardized_text = standardized_line;
  plan.intermediate_thoughts = matched;
  try {
    validate_plan(plan, vocab);
  } catch (const std::exception& e) {
    *why = e.what();
    return std::nullopt;
  }
  return plan;
}

}  // namespace

std::string HttpLlmTransport::complete(const LlmEndpoint& endpoint,
                                       const std::string& request_json) {
  endpoint.validate();
  httplib::Client client(endpoint.base_url);
  const auto seconds = static_cast<time_t>(endpoint.timeout_seconds);
  const auto micros = static_cast<time_t>(
      (endpoint.timeout_seconds - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    const char* key = std::getenv(endpoint.api_key_env.c_str());
    if (key != nullptr && key[0] != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post("/v1/chat/completions", headers, request_json,
                         "application/json");
  if (!res) {
    throw std::runtime_error("http transport: " +
                             httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw std::runtime_error("http transport: status " +
                             std::to_string(res->status) + ": " + res->body);
  }
  return res->body;
}

struct RecordedLlmTransport::State {
  mutable std::mutex mutex;
  std::vector<std::string> responses;
  size_t next = 0;
  std::vector<std::string> requests;
};

RecordedLlmTransport::RecordedLlmTransport(std::vector<std::string> responses)
    : state_(std::make_shared<State>()) {
  state_->responses = std::move(responses);
}

std::string RecordedLlmTransport::complete(const LlmEndpoint& /*endpoint*/,
                                           const std::string& request_json) {
  std::lock_guard<std::mutex> lock(state_->mutex);
  state_->requests.push_back(request_json);
  if (state_->next >= state_->responses.size()) {
    throw std::runtime_error("recorded transport: no responses left");
  }
  return state_->responses[state_->next++];
}

std::vector<std::string> RecordedLlmTransport::requests() const {
  std::lock_guard<std::mutex> lock(state_->mutex);
  return state_->requests;
}

std::vector<std::string> load_recorded_responses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open recorded fixture: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad recorded fixture '" + path +
                             "': " + e.what());
  }
  if (!j.is_array()) {
    throw std::runtime_error("recorded fixture '" + path +
                             "': expected a JSON array");
  }
  std::vector<std::string> out;
  for (const auto& item : j) {
    const auto& response = item.at("response");
    out.push_back(response.is_string() ? response.get<std::string>()
                                       : response.dump());
  }
  return out;
}

Plan plan_llm(const LlmEndpoint& endpoint, const PromptTemplate& tmpl,
              const Lexicon& vocab, const std::string& text,
              LlmTransport* transport) {
  if (trim(text).empty()) {
    throw std::invalid_argument("plan_llm: empty text");
  }
  endpoint.validate();
  vocab.validate();
  HttpLlmTransport fallback;
  LlmTransport& wire = transport != nullptr ? *transport : fallback;

  const std::string user = build_user_message(tmpl, text);
  std::string raw =
      send_with_retries(wire, endpoint, make_request(endpoint, tmpl, user));
  std::string why;
  if (auto plan = try_parse(raw, vocab, &why)) return *plan;

  // One corrective reprompt carrying the valid vocabulary.
  const std::string user2 =
      user + "\n\nYour previous reply was invalid (" + why +
      "). Valid object categories: " + join(vocab.categories) +
      ". Valid body part names: " + join(vocab.parts) +
      ". Reply again with exactly three lines labeled 'Object:', 'Parts:', "
      "and 'Standardized:'.";
  raw =
      send_with_retries(wire, endpoint, make_request(endpoint, tmpl, user2));
  if (auto plan = try_parse(raw, vocab, &why)) return *plan;
  throw std::runtime_error("plan_llm: invalid response after reprompt (" +
                           why + "); last response: " + raw);
}

std::vector<PlanOutcome> plan_llm_many(const LlmEndpoint& endpoint,
                                       const PromptTemplate& tmpl,
                                       const Lexicon& vocab,
                                       const std::vector<std::string>& texts,
                                       LlmTransport* transport,
                                       int max_in_flight) {
  if (max_in_flight < 1) {
    throw std::invalid_argument("plan_llm_many: max_in_flight must be >= 1");
  }
  std::vector<PlanOutcome> out(texts.size());
  if (texts.empty()) return out;
  HttpLlmTransport fallback;
  LlmTransport* wire = transport != nullptr ? transport : &fallback;

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < texts.size();
         i = next.fetch_add(1)) {
      try {
        out[i].plan = plan_llm(endpoint, tmpl, vocab, texts[i], wire);
        out[i].ok = true;
      } catch (const std::exception& e) {
        out[i].ok = false;
        out[i].error = e.what();
      }
    }
  };
  const size_t worker_count =
      std::min(static_cast<size_t>(max_in_flight), texts.size());
  std::vector<std::thread> pool;
  pool.reserve(worker_count);
  for (size_t w = 0; w < worker_count; ++w) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  return out;
}

}  // namespace hoisynth::planning
