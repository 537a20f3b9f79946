// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "promptforge/core/error.hpp"
#include "promptforge/textopt/textopt.hpp"

namespace promptforge::textopt {

namespace {

const PromptCandidate& get(Session& s, const Member& m) { return s.tracker().candidate(m.round, m.index); }

std::vector<Member> top(Session& s, std::vector<Member> members, std::size_t k) {
  std::stable_sort(members.begin(), members.end(), [&](const Member& a, const Member& b) {
    return s.tracker().ranks_before(get(s, a), get(s, b));
  });
  if (members.size() > k) members.resize(k);
  return members;
}

// Flags this round's members of `kept` as selected and clears the rest.
void mark_selected(Session& s, int round, const std::vector<Member>& kept) {
  for (std::size_t i = 0; i < s.tracker().pool(round).size(); ++i) {
    const bool in = std::any_of(kept.begin(), kept.end(),
                                [&](const Member& m) { return m.round == round && m.index == i; });
    s.tracker().candidate(round, i).selected = in;
  }
}

std::size_t as_size(int n) { return static_cast<std::size_t>(n); }

std::vector<std::string> first_n(std::vector<std::string> v, int n) {
  if (v.size() > as_size(n)) v.resize(as_size(n));
  return v;
}

}  // namespace

std::vector<Member> ape_round(Session& s, int round, const std::vector<Member>& pool) {
  if (pool.empty()) throw ContractError("ape_round needs a non-empty pool");
  const OptimizerConfig& cfg = s.config();
  const std::string parent = get(s, pool.front()).id;

  std::vector<Member> merged = pool;
  auto induced = s.ask(Role::induce, {{"exemplars", s.exemplars(round)},
                                      {"num_prompts", std::to_string(cfg.candidates_per_round)}});
  if (induced) {
    for (const auto& text : first_n(parse_prompts(*induced), cfg.candidates_per_round)) {
      merged.push_back({round, s.propose(round, text, parent)});
    }
  }
  const std::vector<Member> survivors = top(s, merged, as_size(cfg.pool_size));

  std::vector<Member> next = survivors;
  for (const Member& m : survivors) {
    const PromptCandidate source = get(s, m);
    auto out = s.ask(Role::paraphrase, {{"prompt", source.text}});
    if (!out) continue;
    const auto parsed = parse_prompts(*out);
    if (!parsed.empty()) next.push_back({round, s.propose(round, parsed.front(), source.id)});
  }
  next = top(s, next, as_size(cfg.pool_size));
  mark_selected(s, round, next);
  return next;
}

std::vector<Member> apo_round(Session& s, int round, const std::vector<Member>& beam) {
  const OptimizerConfig& cfg = s.config();
  std::vector<Member> merged = beam;
  for (const Member& m : beam) {
    const PromptCandidate source = get(s, m);
    const FeedbackBundle bundle = s.bundle_for(source);
    if (bundle.error_cases.empty()) continue;
    const std::string errors = format_error_cases(bundle.error_cases);
    auto critique = s.ask(Role::critique, {{"prompt", source.text}, {"error_cases", errors}});
    if (!critique) continue;
    auto edited = s.ask(Role::edit, {{"prompt", source.text},
                                     {"error_cases", errors},
                                     {"critique", trim(*critique)},
                                     {"num_prompts", std::to_string(cfg.candidates_per_round)}});
    if (!edited) continue;
    for (const auto& text : first_n(parse_prompts(*edited), cfg.candidates_per_round)) {
      merged.push_back({round, s.propose(round, text, source.id)});
    }
  }
  std::vector<Member> next = top(s, merged, as_size(cfg.beam_width));
  mark_selected(s, round, next);
  return next;
}

std::vector<Member> pe2_round(Session& s, int round, const Member& current,
                              const std::vector<HistoryEntry>& history) {
  const OptimizerConfig& cfg = s.config();
  const PromptCandidate source = get(s, current);
  const FeedbackBundle bundle = s.bundle_for(source, history);
  std::optional<std::string> out;
  const std::map<std::string, std::string> common = {
      {"prompt", source.text},
      {"score", format_score(bundle.score)},
      {"history", format_history(bundle.history)},
      {"step_size", std::to_string(cfg.step_size)},
  };
  if (bundle.error_cases.empty()) {
    out = s.ask(Role::polish, common);
  } else {
    auto slots = common;
    slots["error_cases"] = format_error_cases(bundle.error_cases);
    out = s.ask(Role::inspect_and_refine, slots);
  }
  std::vector<Member> proposals;
  if (out) {
    for (const auto& text : first_n(parse_prompts(*out, /*strict=*/true), cfg.candidates_per_round)) {
      proposals.push_back({round, s.propose(round, text, source.id)});
    }
  }
  return proposals;
}

std::optional<Member> textgrad_round(Session& s, int round, const Member& current) {
  const PromptCandidate source = get(s, current);
  const FeedbackBundle bundle = s.bundle_for(source);
  auto gradient = s.ask(Role::textual_gradient,
                        {{"prompt", source.text}, {"error_cases", format_error_cases(bundle.error_cases)}});
  if (!gradient) return std::nullopt;
  auto rewritten = s.ask(Role::apply_gradient, {{"prompt", source.text}, {"gradient", trim(*gradient)}});
  if (!rewritten) return std::nullopt;
  const auto parsed = parse_prompts(*rewritten);
  if (parsed.empty()) return std::nullopt;
  return Member{round, s.propose(round, parsed.front(), source.id)};
}

namespace {

Member best_member(Session& s) {
  const PromptCandidate& best = s.tracker().best();
  const auto& pool = s.tracker().pool(best.provenance.round);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].id == best.id) return {best.provenance.round, i};
  }
  throw ContractError("best candidate missing from its pool");
}

// The round's own top candidate, for PE2's trajectory-aware history.
std::optional<HistoryEntry> round_top(Session& s, int round) {
  const auto& pool = s.tracker().pool(round);
  if (pool.empty()) return std::nullopt;
  std::vector<Member> members;
  for (std::size_t i = 0; i < pool.size(); ++i) members.push_back({round, i});
  const PromptCandidate& c = get(s, top(s, members, 1).front());
  return HistoryEntry{c.text, *c.score};
}

}  // namespace

OptimizationResult optimize(const OptimizerConfig& config, const TaskDataset& dataset,
                            const std::string& p_init, const RunHooks& hooks) {
  Session s(config, dataset, hooks);
  RunTracker& tracker = s.tracker();

  tracker.begin_round(0);
  const Member seed{0, s.propose(0, p_init, "")};
  tracker.candidate(0, seed.index).selected = true;
  tracker.commit_round(0);

  std::vector<Member> pool{seed};
  std::vector<HistoryEntry> history;
  for (int round = 1; round <= config.rounds; ++round) {
    tracker.begin_round(round);
    if (config.method == Method::apo && s.bundle_for(get(s, pool.front())).error_cases.empty()) {
      // Nothing to critique: this round is a no-op and the search ends here.
      tracker.commit_round(round);
      tracker.log("beam leader has no error cases; stopping at round " + std::to_string(round));
      break;
    }
    switch (config.method) {
      case Method::ape:
        pool = ape_round(s, round, pool);
        break;
      case Method::apo:
        pool = apo_round(s, round, pool);
        break;
      case Method::pe2: {
        if (auto h = round_top(s, round - 1)) history.push_back(*h);
        pe2_round(s, round, best_member(s), history);
        break;
      }
      case Method::textgrad:
        textgrad_round(s, round, best_member(s));
        break;
      case Method::greater:
        throw ContractError("greater is not a textual method");
    }
    tracker.commit_round(round);
    if (config.method == Method::pe2 || config.method == Method::textgrad) {
      const Member b = best_member(s);
      mark_selected(s, round, {b});
    }
    tracker.log("round " + std::to_string(round) + " best " + format_score(*tracker.best().score));
  }
  return s.finish();
}

}  // namespace promptforge::textopt
