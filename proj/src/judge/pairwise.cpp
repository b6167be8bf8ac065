#include "iftkit/judge/pairwise.hpp"

#include <cctype>

namespace iftkit::judge {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

const std::vector<std::string_view>& pairwise_labels() {
  static const std::vector<std::string_view> labels = {
      "[Question]",
      "[The Start of Assistant 1's Answer]",
      "[The End of Assistant 1's Answer]",
      "[The Start of Assistant 2's Answer]",
      "[The End of Assistant 2's Answer]",
      "[System]"};
  return labels;
}

PairwiseTemplate PairwiseTemplate::builtin(std::string_view id) {
  return {PromptTemplate::builtin(id),
          std::string(trim(PromptTemplate::builtin(std::string(id) + ".system").text()))};
}

PairwiseTemplate PairwiseTemplate::load(const std::filesystem::path& path) {
  PairwiseTemplate t{PromptTemplate::load(path), ""};
  const auto system_path =
      path.parent_path() / (path.stem().string() + ".system" + path.extension().string());
  std::error_code ec;
  if (std::filesystem::exists(system_path, ec)) {
    t.system = std::string(trim(PromptTemplate::load(system_path).text()));
  }
  return t;
}

void check_pairwise_template(const PairwiseTemplate& tmpl) {
  const auto& t = tmpl.user.text();
  std::size_t prev = 0;
  for (auto name : {"question", "answer_1", "answer_2"}) {
    if (tmpl.user.placeholder_count(name) != 1) {
      throw ConfigError("template " + tmpl.id() + " must contain {" +
                        std::string(name) + "} exactly once");
    }
    const auto at = t.find("{" + std::string(name) + "}");
    if (at < prev) {
      throw ConfigError("template " + tmpl.id() +
                        " must place {question}, {answer_1}, {answer_2} in order");
    }
    prev = at;
  }
  for (auto label : pairwise_labels()) {
    if (count_line_starts(t, label) != 1) {
      throw ConfigError("template " + tmpl.id() + " must start exactly one line with '" +
                        std::string(label) + "'");
    }
  }
}

std::string build_pairwise_prompt(std::string_view question,
                                  std::string_view answer_first,
                                  std::string_view answer_second,
                                  const PairwiseTemplate& tmpl) {
  check_pairwise_template(tmpl);
  const auto& labels = pairwise_labels();
  return tmpl.user.render({{"question", quote_if_reserved(question, labels)},
                           {"answer_1", quote_if_reserved(answer_first, labels)},
                           {"answer_2", quote_if_reserved(answer_second, labels)}});
}

std::vector<double> first_line_numbers(std::string_view raw) {
  std::string_view line;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    const auto nl = raw.find('\n', pos);
    line = raw.substr(pos, nl == std::string_view::npos ? raw.size() - pos : nl - pos);
    if (!trim(line).empty() || nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  std::vector<double> numbers;
  for (std::size_t i = 0; i < line.size();) {
    if (!is_digit(line[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (start > 0 && line[start - 1] == '-') --start;
    while (i < line.size() && is_digit(line[i])) ++i;
    if (i + 1 < line.size() && line[i] == '.' && is_digit(line[i + 1])) {
      ++i;
      while (i < line.size() && is_digit(line[i])) ++i;
    }
    numbers.push_back(std::stod(std::string(line.substr(start, i - start))));
  }
  return numbers;
}

std::pair<double, double> parse_scores(std::string_view raw) {
  const auto numbers = first_line_numbers(raw);
  if (numbers.size() < 2) {
    throw JudgeParseError("judge output has fewer than two scores on its first line",
                          std::string(raw));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    if (!(numbers[i] >= 1.0 && numbers[i] <= 10.0)) {
      throw JudgeParseError("judge score " + std::to_string(numbers[i]) +
                                " outside [1, 10]",
                            std::string(raw));
    }
  }
  return {numbers[0], numbers[1]};
}

std::string_view order_name(Order order) {
  return order == Order::kAFirst ? "a_first" : "b_first";
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kWin: return "win";
    case Verdict::kTie: return "tie";
    case Verdict::kLose: return "lose";
  }
  return "tie";
}

nlohmann::ordered_json Judgment::to_json() const {
  nlohmann::ordered_json j;
  j["instruction_id"] = instruction_id;
  j["order"] = order_name(order);
  j["score_first"] = score_first;
  j["score_second"] = score_second;
  j["raw_text"] = raw_text;
  j["request_digest"] = request_digest;
  return j;
}

PairwiseOutcome aggregate_outcome(const Judgment& x, const Judgment& y) {
  if (x.instruction_id != y.instruction_id) {
    throw ValidationError("cannot pair judgments for " + x.instruction_id + " and " +
                          y.instruction_id);
  }
  if (x.order == y.order) {
    throw ValidationError("judgments for " + x.instruction_id +
                          " must cover both presentation orders");
  }
  const Judgment& a_first = x.order == Order::kAFirst ? x : y;
  const Judgment& b_first = x.order == Order::kAFirst ? y : x;
  PairwiseOutcome out;
  out.instruction_id = x.instruction_id;
  out.total_a = a_first.score_first + b_first.score_second;
  out.total_b = a_first.score_second + b_first.score_first;
  out.verdict = out.total_a > out.total_b   ? Verdict::kWin
                : out.total_a == out.total_b ? Verdict::kTie
                                             : Verdict::kLose;
  return out;
}

std::pair<oracle::ChatRequest, oracle::ChatRequest> pair_requests(
    std::string_view question, std::string_view response_a,
    std::string_view response_b, const PairwiseTemplate& tmpl) {
  auto make = [&](std::string_view first, std::string_view second) {
    oracle::ChatRequest req;
    if (!tmpl.system.empty()) req.messages.push_back({oracle::Role::kSystem, tmpl.system});
    req.messages.push_back(
        {oracle::Role::kUser, build_pairwise_prompt(question, first, second, tmpl)});
    return req;
  };
  return {make(response_a, response_b), make(response_b, response_a)};
}

namespace detail {

// Shared with evaluation.cpp: turns one batch item into a judgment or an
// error entry on `pair`.
void record_judgment(PairJudgment& pair, Order order, const oracle::BatchItem& item) {
  if (!item.ok()) {
    pair.errors.push_back(std::string(order_name(order)) + ": " +
                          std::string(oracle::failure_class_name(*item.failure)) + ": " +
                          item.error);
    return;
  }
  try {
    const auto [first, second] = parse_scores(item.response->content);
    Judgment j;
    j.instruction_id = pair.instruction_id;
    j.order = order;
    j.score_first = first;
    j.score_second = second;
    j.raw_text = item.response->content;
    j.request_digest = item.response->request_digest;
    (order == Order::kAFirst ? pair.a_first : pair.b_first) = std::move(j);
  } catch (const JudgeParseError& e) {
    pair.errors.push_back(std::string(order_name(order)) + ": parse: " + e.what());
    pair.raw_failures.push_back(e.raw());
  }
}

}  // namespace detail

PairJudgment judge_pair(std::string_view instruction_id, std::string_view question,
                        std::string_view response_a, std::string_view response_b,
                        const oracle::OracleClient& client,
                        const PairwiseTemplate& tmpl) {
  if (response_a.empty() || response_b.empty()) {
    throw PreconditionError("both responses for " + std::string(instruction_id) +
                            " must be non-empty");
  }
  auto [a_first, b_first] = pair_requests(question, response_a, response_b, tmpl);
  const std::vector<oracle::ChatRequest> requests = {std::move(a_first),
                                                     std::move(b_first)};
  const auto batch = client.chat_batch(requests);
  PairJudgment pair;
  pair.instruction_id = std::string(instruction_id);
  detail::record_judgment(pair, Order::kAFirst, batch.items[0]);
  detail::record_judgment(pair, Order::kBFirst, batch.items[1]);
  return pair;
}

}  // namespace iftkit::judge
