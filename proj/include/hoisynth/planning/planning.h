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

#ifndef HOISYNTH_PLANNING_PLANNING_H_
#define HOISYNTH_PLANNING_PLANNING_H_

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hoisynth::planning {

// ASCII lowercase copy.
std::string to_lower_copy(const std::string& s);

// Lowercased alphanumeric word runs, in order (underscores glue words:
// "left_hand" stays one token).
std::vector<std::string> tokenize_words(const std::string& text);

// Surface forms a base word should match ("lift" -> lift, lifts, lifted,
// lifting, ...). Used for verb-cue and clip-tag matching.
std::vector<std::string> word_inflections(const std::string& base);

// High-level plan extracted from a free-text description: what object the
// person interacts with, which body parts make first contact, and a
// standardized one-sentence restatement that downstream motion selection
// keys on.
struct Plan {
  std::string object_category;
  std::vector<std::string> contact_parts;
  std::string standardized_text;
  std::vector<std::string> intermediate_thoughts;
};

// Deterministic planning vocabulary: object synonyms, verb cues mapping
// to contact parts, and the valid category/part lists every Plan is
// validated against.
struct Lexicon {
  struct VerbRule {
    std::string cue;      // base form, e.g. "lift"
    std::string display;  // conjugated form for the standardized sentence
    std::vector<std::string> parts;
  };
  std::vector<std::string> categories;
  std::vector<std::string> parts;
  std::map<std::string, std::string> synonyms;  // surface word -> category
  std::vector<VerbRule> verbs;
  std::vector<std::string> default_parts;  // used when no verb cue matches

  void validate() const;  // throws std::runtime_error on inconsistency
};

// Built-in vocabulary matching the bundled humanoid rig's part names.
Lexicon default_lexicon();

// JSON lexicon files (schema mirrors the struct fields).
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const Lexicon& lexicon, const std::string& path);

// Three-question prompt scaffold for the LLM planner. The guideline
// wording in the default template is authored for this project.
struct PromptTemplate {
  struct FewShot {
    std::string input;
    std::array<std::string, 3> answers;  // object, parts, standardized
  };
  std::string system_preamble;
  std::vector<FewShot> few_shot_examples;
  std::array<std::string, 3> question_forms;
};

PromptTemplate default_prompt_template();
PromptTemplate load_prompt_template(const std::string& path);
void save_prompt_template(const PromptTemplate& tmpl, const std::string& path);

// Chat-completion endpoint description. api_key_env names an environment
// variable; when non-empty its value is sent as a bearer token.
struct LlmEndpoint {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::string model;
  double timeout_seconds = 30.0;
  int max_retries = 2;  // additional attempts after the first
  std::string api_key_env;

  void validate() const;  // timeout > 0, base_url and model non-empty
};

// Transport seam for the LLM client: sends one chat-completion request
// body and returns the raw response body. Implementations must be safe to
// call from several threads at once.
class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  virtual std::string complete(const LlmEndpoint& endpoint,
                               const std::string& request_json) = 0;
};

// Real HTTP(S) client (one request per call; no connection reuse).
class HttpLlmTransport : public LlmTransport {
 public:
  std::string complete(const LlmEndpoint& endpoint,
                       const std::string& request_json) override;
};

// Replays recorded response bodies in order and keeps every request body
// for inspection; throws when the recording is exhausted. Thread-safe.
class RecordedLlmTransport : public LlmTransport {
 public:
  explicit RecordedLlmTransport(std::vector<std::string> responses);
  std::string complete(const LlmEndpoint& endpoint,
                       const std::string& request_json) override;
  std::vector<std::string> requests() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

// Loads "response" bodies from a recorded-fixture JSON file: an array of
// {"request": ..., "response": ...} objects (request side kept for
// documentation; only responses are replayed).
std::vector<std::string> load_recorded_responses(const std::string& path);

// Checks the Plan type invariants against the vocabulary: known category,
// at least one known part, non-empty standardized text.
void validate_plan(const Plan& plan, const Lexicon& vocab);

// Rule-based planner: longest-synonym category match, verb-cue part
// lookup (default parts when no cue), template-standardized sentence.
// Deterministic and offline. Throws "unknown object" when no synonym
// matches.
Plan plan_rules(const std::string& text, const Lexicon& lexicon);

// LLM planner: one chat request carrying the preamble, few-shot examples,
// the three questions, and the text; answers are parsed from "Object:" /
// "Parts:" / "Standardized:" lines. A response failing validation
// triggers exactly one reprompt with the valid lists appended; a second
// failure raises a validation error carrying the raw response. Transport
// failures retry up to endpoint.max_retries times, then raise a transport
// error. `transport` defaults to a fresh HttpLlmTransport.
Plan plan_llm(const LlmEndpoint& endpoint, const PromptTemplate& tmpl,
              const Lexicon& vocab, const std::string& text,
              LlmTransport* transport = nullptr);

// Outcome of one item in a concurrent planning batch.
struct PlanOutcome {
  bool ok = false;
  Plan plan;
  std::string error;
};

// Plans many texts concurrently with at most max_in_flight requests
// outstanding; per-item failures are captured, not thrown.
std::vector<PlanOutcome> plan_llm_many(const LlmEndpoint& endpoint,
                                       const PromptTemplate& tmpl,
                                       const Lexicon& vocab,
                                       const std::vector<std::string>& texts,
                                       LlmTransport* transport,
                                       int max_in_flight);

// One labeled evaluation item; `ambiguous` flags items the starred
// metrics exclude.
struct LabeledExample {
  std::string text;
  std::string gt_category;
  std::vector<std::string> gt_parts;
  bool ambiguous = false;
};

// Planner accuracy: q1 = exact category match rate, q2 = rate at which
// the predicted part set intersects the ground-truth set; starred
// variants skip ambiguous items (0.0 when every item is flagged). A
// planner exception counts the item wrong on both questions.
struct PlannerScores {
  double q1 = 0.0;
  double q1_star = 0.0;
  double q2 = 0.0;
  double q2_star = 0.0;
};

PlannerScores eval_planner(
    const std::function<Plan(const std::string&)>& planner,
    const std::vector<LabeledExample>& items);

}  // namespace hoisynth::planning

#endif  // HOISYNTH_PLANNING_PLANNING_H_
