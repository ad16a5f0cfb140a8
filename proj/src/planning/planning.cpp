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

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace hoisynth::planning {
namespace {

using nlohmann::json;

json lexicon_to_json(const Lexicon& lex) {
  json j;
  j["categories"] = lex.categories;
  j["parts"] = lex.parts;
  j["synonyms"] = lex.synonyms;
  j["verbs"] = json::array();
  for (const auto& rule : lex.verbs) {
    j["verbs"].push_back(
        {{"cue", rule.cue}, {"display", rule.display}, {"parts", rule.parts}});
  }
  j["default_parts"] = lex.default_parts;
  return j;
}

Lexicon lexicon_from_json(const json& j) {
  Lexicon lex;
  lex.categories = j.at("categories").get<std::vector<std::string>>();
  lex.parts = j.at("parts").get<std::vector<std::string>>();
  lex.synonyms = j.at("synonyms").get<std::map<std::string, std::string>>();
  for (const auto& rule : j.at("verbs")) {
    lex.verbs.push_back({rule.at("cue").get<std::string>(),
                         rule.at("display").get<std::string>(),
                         rule.at("parts").get<std::vector<std::string>>()});
  }
  lex.default_parts = j.at("default_parts").get<std::vector<std::string>>();
  lex.validate();
  return lex;
}

}  // namespace

std::string to_lower_copy(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> word_inflections(const std::string& base) {
  std::vector<std::string> out = {base, base + "s", base + "es", base + "ed",
                                  base + "ing"};
  if (!base.empty() && base.back() == 'y') {
    out.push_back(base.substr(0, base.size() - 1) + "ies");
  }
  if (!base.empty() && base.back() == 'e') {
    out.push_back(base.substr(0, base.size() - 1) + "ing");
    out.push_back(base + "d");
  }
  return out;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) != 0 || c == '_') {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

void Lexicon::validate() const {
  if (categories.empty()) throw std::runtime_error("lexicon: no categories");
  if (parts.empty()) throw std::runtime_error("lexicon: no parts");
  const std::set<std::string> cats(categories.begin(), categories.end());
  const std::set<std::string> part_set(parts.begin(), parts.end());
  for (const auto& [word, category] : synonyms) {
    if (cats.count(category) == 0) {
      throw std::runtime_error("lexicon: synonym '" + word +
                               "' maps to unknown category '" + category +
                               "'");
    }
  }
  auto check_parts = [&](const std::vector<std::string>& list,
                         const std::string& where) {
    if (list.empty()) {
      throw std::runtime_error("lexicon: empty part list for " + where);
    }
    for (const std::string& p : list) {
      if (part_set.count(p) == 0) {
        throw std::runtime_error("lexicon: unknown part '" + p + "' for " +
                                 where);
      }
    }
  };
  for (const auto& rule : verbs) {
    if (rule.cue.empty()) throw std::runtime_error("lexicon: empty verb cue");
    check_parts(rule.parts, "verb '" + rule.cue + "'");
  }
  check_parts(default_parts, "default_parts");
}

Lexicon default_lexicon() {
  Lexicon lex;
  lex.categories = {"box", "ball", "backpack", "chair", "mug"};
  lex.parts = {"pelvis",      "left_hip",      "right_hip",   "spine1",
               "left_knee",   "right_knee",    "spine2",      "left_ankle",
               "right_ankle", "spine3",        "left_foot",   "right_foot",
               "neck",        "left_collar",   "right_collar", "head",
               "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
               "left_wrist",  "right_wrist",   "left_hand",   "right_hand"};
  lex.synonyms = {{"box", "box"},           {"crate", "box"},
                  {"carton", "box"},        {"ball", "ball"},
                  {"football", "ball"},     {"basketball", "ball"},
                  {"backpack", "backpack"}, {"bag", "backpack"},
                  {"knapsack", "backpack"}, {"chair", "chair"},
                  {"seat", "chair"},        {"stool", "chair"},
                  {"mug", "mug"},           {"cup", "mug"}};
  lex.verbs = {
      {"lift", "lifts", {"left_hand", "right_hand"}},
      {"hold", "holds", {"left_hand", "right_hand"}},
      {"carry", "carries", {"left_hand", "right_hand"}},
      {"raise", "raises", {"left_hand", "right_hand"}},
      {"push", "pushes", {"left_hand", "right_hand"}},
      {"pull", "pulls", {"left_hand", "right_hand"}},
      {"kick", "kicks", {"right_foot"}},
      {"grab", "grabs", {"right_hand"}},
      {"touch", "touches", {"right_hand"}},
      {"sit", "sits on", {"pelvis"}},
  };
  lex.default_parts = {"right_hand"};
  lex.validate();
  return lex;
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad lexicon file '" + path + "': " + e.what());
  }
  return lexicon_from_json(j);
}

void save_lexicon(const Lexicon& lexicon, const std::string& path) {
  lexicon.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write lexicon file: " + path);
  out << lexicon_to_json(lexicon).dump(2) << "\n";
}

PromptTemplate default_prompt_template() {
  PromptTemplate tmpl;
  tmpl.system_preamble =
      "You answer three questions about a short motion description. Reply "
      "with exactly three lines labeled 'Object:', 'Parts:', and "
      "'Standardized:'. Object is a single category word. Parts is a "
      "comma-separated list of body part names. Standardized is one short "
      "present-tense sentence of the form 'a person <verb> the <object> "
      "...'. (Guideline wording authored for this project.)";
  tmpl.question_forms = {
      "Which object does the person interact with?",
      "Which body parts make first contact with the object?",
      "Rewrite the text as one standardized sentence describing the "
      "interaction."};
  tmpl.few_shot_examples = {
      {"a person lifts a box with both hands",
       {"box", "left_hand, right_hand", "a person lifts the box."}},
      {"someone kicks a ball across the room",
       {"ball", "right_foot", "a person kicks the ball."}},
  };
  return tmpl;
}

PromptTemplate load_prompt_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open template file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad template file '" + path + "': " + e.what());
  }
  PromptTemplate tmpl;
  tmpl.system_preamble = j.at("system_preamble").get<std::string>();
  const auto questions = j.at("question_forms").get<std::vector<std::string>>();
  if (questions.size() != 3) {
    throw std::runtime_error("template file '" + path +
                             "': exactly three question forms required");
  }
  std::copy(questions.begin(), questions.end(), tmpl.question_forms.begin());
  for (const auto& ex : j.at("few_shot_examples")) {
    const auto answers = ex.at("answers").get<std::vector<std::string>>();
    if (answers.size() != 3) {
      throw std::runtime_error("template file '" + path +
                               "': few-shot example needs three answers");
    }
    PromptTemplate::FewShot shot;
    shot.input = ex.at("input").get<std::string>();
    std::copy(answers.begin(), answers.end(), shot.answers.begin());
    tmpl.few_shot_examples.push_back(shot);
  }
  return tmpl;
}

void save_prompt_template(const PromptTemplate& tmpl,
                          const std::string& path) {
  json j;
  j["system_preamble"] = tmpl.system_preamble;
  j["question_forms"] =
      std::vector<std::string>(tmpl.question_forms.begin(),
                               tmpl.question_forms.end());
  j["few_shot_examples"] = json::array();
  for (const auto& shot : tmpl.few_shot_examples) {
    j["few_shot_examples"].push_back(
        {{"input", shot.input},
         {"answers", std::vector<std::string>(shot.answers.begin(),
                                              shot.answers.end())}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write template file: " + path);
  out << j.dump(2) << "\n";
}

void LlmEndpoint::validate() const {
  if (base_url.empty()) throw std::runtime_error("endpoint: empty base_url");
  if (model.empty()) throw std::runtime_error("endpoint: empty model name");
  if (!(timeout_seconds > 0.0)) {
    throw std::runtime_error("endpoint: timeout must be positive");
  }
  if (max_retries < 0) {
    throw std::runtime_error("endpoint: max_retries must be >= 0");
  }
}

void validate_plan(const Plan& plan, const Lexicon& vocab) {
  if (std::find(vocab.categories.begin(), vocab.categories.end(),
                plan.object_category) == vocab.categories.end()) {
    throw std::runtime_error("plan: unknown object category '" +
                             plan.object_category + "'");
  }
  if (plan.contact_parts.empty()) {
    throw std::runtime_error("plan: no contact parts");
  }
  for (const std::string& part : plan.contact_parts) {
    if (std::find(vocab.parts.begin(), vocab.parts.end(), part) ==
        vocab.parts.end()) {
      throw std::runtime_error("plan: unknown body part '" + part + "'");
    }
  }
  if (plan.standardized_text.empty()) {
    throw std::runtime_error("plan: empty standardized text");
  }
}

Plan plan_rules(const std::string& text, const Lexicon& lexicon) {
  lexicon.validate();
  const std::vector<std::string> tokens = tokenize_words(text);
  if (tokens.empty()) throw std::invalid_argument("plan_rules: empty text");
  const std::set<std::string> token_set(tokens.begin(), tokens.end());

  // Category: longest matching synonym, lexicographic tie-break.
  std::string best_word;
  for (const auto& [word, category] : lexicon.synonyms) {
    (void)category;
    if (token_set.count(word) == 0) continue;
    if (word.size() > best_word.size() ||
        (word.size() == best_word.size() && word < best_word)) {
      best_word = word;
    }
  }
  if (best_word.empty()) {
    throw std::runtime_error("plan_rules: unknown object in text '" + text +
                             "'");
  }
  const std::string category = lexicon.synonyms.at(best_word);

  // Parts: union of every matched verb rule, in rule order.
  std::vector<std::string> parts;
  std::string display;
  for (const auto& rule : lexicon.verbs) {
    bool matched = false;
    for (const std::string& variant : word_inflections(rule.cue)) {
      if (token_set.count(variant) != 0) {
        matched = true;
        break;
      }
    }
    if (!matched) continue;
    if (display.empty()) display = rule.display;
    for (const std::string& part : rule.parts) {
      if (std::find(parts.begin(), parts.end(), part) == parts.end()) {
        parts.push_back(part);
      }
    }
  }
  if (parts.empty()) parts = lexicon.default_parts;
  if (display.empty()) display = "interacts with";

  Plan plan;
  plan.object_category = category;
  plan.contact_parts = parts;
  plan.standardized_text = "a person " + display + " the " + category + ".";
  std::string joined;
  for (const std::string& part : parts) {
    if (!joined.empty()) joined += ", ";
    joined += part;
  }
  plan.intermediate_thoughts = {"object: " + category, "parts: " + joined,
                                "standardized: " + plan.standardized_text};
  validate_plan(plan, lexicon);
  return plan;
}

PlannerScores eval_planner(
    const std::function<Plan(const std::string&)>& planner,
    const std::vector<LabeledExample>& items) {
  if (items.empty()) {
    throw std::invalid_argument("eval_planner: empty labeled set");
  }
  int q1_hits = 0, q2_hits = 0, q1_star_hits = 0, q2_star_hits = 0;
  int unambiguous = 0;
  for (const LabeledExample& item : items) {
    bool q1_ok = false, q2_ok = false;
    try {
      const Plan plan = planner(item.text);
      q1_ok = plan.object_category == item.gt_category;
      for (const std::string& part : plan.contact_parts) {
        if (std::find(item.gt_parts.begin(), item.gt_parts.end(), part) !=
            item.gt_parts.end()) {
          q2_ok = true;
          break;
        }
      }
    } catch (const std::exception&) {
      // A planner failure counts the item wrong on both questions.
    }
    q1_hits += q1_ok ? 1 : 0;
    q2_hits += q2_ok ? 1 : 0;
    if (!item.ambiguous) {
      ++unambiguous;
      q1_star_hits += q1_ok ? 1 : 0;
      q2_star_hits += q2_ok ? 1 : 0;
    }
  }
  PlannerScores scores;
  const double n = static_cast<double>(items.size());
  scores.q1 = q1_hits / n;
  scores.q2 = q2_hits / n;
  scores.q1_star = unambiguous > 0 ? q1_star_hits / static_cast<double>(
                                                        unambiguous)
                                   : 0.0;
  scores.q2_star = unambiguous > 0 ? q2_star_hits / static_cast<double>(
                                                        unambiguous)
                                   : 0.0;
  return scores;
}

}  // namespace hoisynth::planning
