#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "skillopt/optimizer.hpp"

namespace skillopt {

namespace {

// Stopwords long enough to pass the five-letter floor.
const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words{
      "about",    "above",   "after",      "again",    "against", "among",  "because", "before",  "being",
      "below",    "between", "could",      "couldn",   "doesn",   "doing",  "during",  "either",  "every",
      "further",  "hadn",    "hasn",       "haven",    "having",  "herself", "himself", "itself",  "might",
      "mightn",   "mustn",   "myself",     "needn",    "neither", "other",  "others",  "ourselves", "shall",
      "shan",     "should",  "shouldn",    "since",    "their",   "theirs", "themselves", "there", "these",
      "thing",    "things",  "those",      "though",   "three",   "through", "under",  "until",   "wasn",
      "weren",    "where",   "whether",    "which",    "while",   "whose",  "within",  "without", "won",
      "would",    "wouldn",  "yours",      "yourself", "yourselves", "another", "around", "across", "along",
      "already",  "although", "always",    "anything", "become",  "becomes", "behind", "beside",  "besides",
      "beyond",   "cannot",  "different",  "during",   "enough",  "especially", "everything", "first",
      "follow",   "following", "given",    "however",  "including", "instead", "least",  "likely",  "making",
      "might",    "often",   "perhaps",    "please",   "quite",   "rather", "really",  "second",  "several",
      "something", "sometimes", "still",   "third",    "together", "toward", "towards", "unless", "upon",
      "usually",  "various", "whatever",   "whenever", "wherever", "which",  "whole",   "write",   "written",
      "using",    "based",   "below",      "above"};
  return words;
}

// Assessment and procedural vocabulary; shared by every item, so never a leak.
const std::set<std::string, std::less<>>& assessment_vocabulary() {
  static const std::set<std::string, std::less<>> words{
      "score",     "scores",     "scored",      "scoring",    "scorer",     "scorers",    "element",
      "elements",  "response",   "responses",   "respond",    "rubric",     "rubrics",    "student",
      "students",  "describe",   "describes",   "description", "explain",   "explains",   "explanation",
      "answer",    "answers",    "question",    "questions",  "identify",   "identifies", "include",
      "includes",  "including",  "provide",     "provides",   "support",    "supports",   "example",
      "examples",  "evidence",   "correct",     "correctly",  "incorrect",  "complete",   "completely",
      "partial",   "partially",  "specific",    "detail",     "details",    "level",      "levels",
      "point",     "points",     "credit",      "criteria",   "criterion",  "accurate",   "accurately",
      "words",     "sentence",   "sentences",   "paragraph",  "reason",     "reasons",    "reasoning",
      "statement", "statements", "claim",       "claims",     "concept",    "concepts",   "information",
      "additional", "pieces",    "valid",       "relevant",   "clearly",    "clear",      "state",
      "states",    "discuss",    "compare",     "contrast",   "analyze",    "analysis",   "list",
      "support",   "justify",    "justification", "demonstrate", "demonstrates", "understanding",
      "select",    "choose",     "describing",  "explaining", "identifying", "making",    "read",
      "reading",   "text",       "passage",     "article",    "author",     "conclusion", "conclusions",
      "table",     "figure",     "diagram",     "based",      "using",      "total",      "number",
      "ideas",     "example",    "describe",    "items",      "task",       "tasks"};
  return words;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (const char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      current.push_back(static_cast<char>(c | 0x20));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

}  // namespace

std::vector<std::string> content_leak_check(std::string_view delta, const Item& item) {
  std::set<std::string, std::less<>> content_terms;
  for (auto& token : tokenize(item.stem_text)) {
    if (token.size() < 5 || stopwords().contains(token) || assessment_vocabulary().contains(token)) continue;
    content_terms.insert(std::move(token));
  }
  std::vector<std::string> hits;
  for (auto& token : tokenize(delta)) {
    if (content_terms.contains(token) && std::find(hits.begin(), hits.end(), token) == hits.end()) {
      hits.push_back(std::move(token));
    }
  }
  return hits;
}

}  // namespace skillopt
