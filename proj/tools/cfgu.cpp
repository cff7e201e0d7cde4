// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// cfgu: task-vector negation, PII preference datasets, guided decoding,
// ORPO loss values and PII / judge evaluation from one binary.
//
// Exit codes: 0 success, 1 usage, 2 structural or data error,
// 3 external-service error.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfgu/api_client.hpp"
#include "cfgu/dataset.hpp"
#include "cfgu/decoder.hpp"
#include "cfgu/error.hpp"
#include "cfgu/eval.hpp"
#include "cfgu/model_arith.hpp"
#include "cfgu/orpo.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitService = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::map<std::string, cfgu::GuidanceVariant> kVariants = {
    {"uncond-log", cfgu::GuidanceVariant::kUncondLog},
    {"dual-log", cfgu::GuidanceVariant::kDualLog},
    {"dual-prob", cfgu::GuidanceVariant::kDualProb},
};

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cfgu::ConfigError("cannot open " + path.string());
  return in;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw cfgu::ConfigError("cannot write " + path.string());
  out << text;
}

// Options shared by the root app.
struct Globals {
  int workers = 1;
};

// ---------------------------------------------------------------- guidance

struct GuidanceArgs {
  std::string variant = "dual-prob";
  double gamma = 1.0;
  std::string positive = std::string(cfgu::kDoNotShareCondition);
  std::string negative = std::string(cfgu::kShareCondition);
  bool raw_logits = false;
  int max_new_tokens = 64;

  void attach(CLI::App* app) {
    app->add_option("--variant", variant, "Guidance rule: uncond-log, dual-log or dual-prob")
        ->check(CLI::IsMember({"uncond-log", "dual-log", "dual-prob"}));
    app->add_option("--gamma", gamma, "Guidance coefficient (>= 0)")->check(CLI::NonNegativeNumber);
    app->add_option("--positive-condition", positive, "Sentence appended to the system prompt of the positive context");
    app->add_option("--negative-condition", negative,
                    "Sentence appended to the system prompt of the negative context (ignored by uncond-log)");
    app->add_flag("--raw-logits", raw_logits, "Apply log-space rules to raw logits instead of log-probabilities");
    app->add_option("--max-new-tokens", max_new_tokens, "Generation length limit")->check(CLI::PositiveNumber);
  }

  cfgu::GuidanceSpec spec() const {
    cfgu::GuidanceSpec s;
    s.variant = kVariants.at(variant);
    s.gamma = gamma;
    s.positive_condition = positive;
    s.negative_condition = s.variant == cfgu::GuidanceVariant::kUncondLog ? "" : negative;
    s.raw_logits = raw_logits;
    return s;
  }
};

ordered_json config_echo(const CLI::App& root, const CLI::App& sub) {
  ordered_json echo;
  echo["command"] = sub.get_parent() && sub.get_parent() != &root
                        ? sub.get_parent()->get_name() + " " + sub.get_name()
                        : sub.get_name();
  echo["global"] = cfgu::cli::resolved_options(root);
  echo["options"] = cfgu::cli::resolved_options(sub);
  return echo;
}

// ---------------------------------------------------------------- subtract

struct SubtractArgs {
  std::string base, finetuned, out;
  double alpha = 0.5;
  bool relu = false;
  std::string relu_sign = "positive";
};

int run_subtract(const SubtractArgs& a, const ordered_json& echo) {
  cfgu::SubtractOptions options;
  options.alpha = a.alpha;
  options.relu = a.relu;
  options.relu_sign = a.relu_sign == "negative" ? cfgu::ReluSign::kNegative : cfgu::ReluSign::kPositive;
  options.metadata["cfgu.config"] = echo.dump();
  cfgu::subtract_files(a.base, a.finetuned, a.out, options);
  std::cerr << "wrote " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string model, prompts, out;
  GuidanceArgs guidance;
  std::string mode = "greedy";
  std::uint64_t seed = 0;
  bool trace = false;
};

ordered_json scores_json(const std::vector<double>& v) {
  ordered_json arr = ordered_json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

int run_generate(const GenerateArgs& a, const Globals& g, const ordered_json& echo) {
  const cfgu::TabularLM model = cfgu::TabularLM::load(a.model);
  auto in = open_in(a.prompts);
  const std::vector<cfgu::PromptRecord> prompts = cfgu::read_prompts(in);
  const cfgu::GuidanceSpec spec = a.guidance.spec();
  spec.validate();

  std::vector<ordered_json> rows(prompts.size());
  std::vector<std::string> errors(prompts.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        cfgu::DecodeRequest request;
        request.dialogue_prefix = prompts[i].prompt;
        request.guidance = spec;
        request.max_new_tokens = a.guidance.max_new_tokens;
        request.trace = a.trace;
        if (a.mode == "sample") request.mode = cfgu::Sample{a.seed + i};
        const cfgu::DecodeResult r = cfgu::decode(model, request);
        ordered_json row;
        row["id"] = prompts[i].id;
        row["text"] = r.text;
        row["token_ids"] = r.token_ids;
        row["stop_reason"] = cfgu::to_string(r.stop_reason);
        if (a.trace) {
          ordered_json steps = ordered_json::array();
          for (const cfgu::StepTrace& s : r.trace) {
            steps.push_back({{"chosen", s.chosen},
                             {"positive", scores_json(s.positive.values)},
                             {"negative", scores_json(s.negative.values)},
                             {"combined", scores_json(s.combined)}});
          }
          row["trace"] = std::move(steps);
        }
        rows[i] = std::move(row);
      } catch (const std::exception& e) {
        errors[i] = prompts[i].id + ": " + e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::max(1, g.workers); ++w) pool.emplace_back(worker);
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw cfgu::InvalidInput(e);
  }

  ordered_json doc;
  doc["config"] = echo;
  doc["results"] = rows;
  write_text(a.out, doc.dump(2) + "\n");
  std::cerr << "wrote " << prompts.size() << " completions to " << a.out << "\n";
  return 0;
}

// ----------------------------------------------------------- build-dataset

struct BuildArgs {
  std::string dialogues, gazetteers, out_dir;
  std::string exclude_labels = "CARDINAL,DATE,PRODUCT,ORDINAL";
  bool cfg = false;
  std::string endpoint = "https://api.openai.com";
  std::string completion_endpoint;
  std::string chat_model = "gpt-4o-mini";
  std::string completion_model = "meta-llama/Llama-3-8b-chat-hf";
  double temperature = 0.7;
  int candidates_per_recipe = 1;
  int max_attempts = 3;
  int backoff_ms = 500;
  bool offline = false;
  std::string candidate_cache;
  double split_ratio = 0.9;
  std::uint64_t seed = 0;
  std::string eos = std::string(cfgu::kDefaultEos);
  std::size_t max_prompt = 1900;
  std::size_t max_total = 2048;
  std::string length_unit = "words";
};

int run_build_dataset(const BuildArgs& a, const Globals& g, const ordered_json& echo) {
  if (a.offline && a.candidate_cache.empty()) throw UsageError("--offline needs --candidate-cache");

  const cfgu::LabelPolicy policy = cfgu::LabelPolicy::from_list(a.exclude_labels);
  const cfgu::PiiDetector detector(cfgu::Gazetteers::load_dir(a.gazetteers));

  auto in = open_in(a.dialogues);
  const cfgu::ParsedDialogues parsed = cfgu::parse_dialogues(in);
  for (const cfgu::RecordError& e : parsed.errors) {
    std::cerr << a.dialogues << ":" << e.line << ": skipped record: " << e.message << "\n";
  }

  std::vector<cfgu::ExpandedSample> samples;
  for (const cfgu::Dialogue& d : parsed.dialogues) {
    auto expanded = cfgu::expand(d, detector, policy);
    std::move(expanded.begin(), expanded.end(), std::back_inserter(samples));
  }
  const cfgu::SplitResult parts = cfgu::split(samples, a.split_ratio, a.seed);

  std::vector<cfgu::ExpandedSample> ordered = parts.train;
  ordered.insert(ordered.end(), parts.test.begin(), parts.test.end());

  cfgu::GenerationOutcome generated;
  if (a.offline) {
    auto cache = open_in(a.candidate_cache);
    std::string line;
    while (std::getline(cache, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      generated.candidates.push_back(cfgu::candidate_from_json(nlohmann::json::parse(line)));
    }
  } else {
    cfgu::EndpointConfig chat_ep;
    chat_ep.base_url = a.endpoint;
    chat_ep.api_key = cfgu::api_key_from_env();
    chat_ep.max_attempts = a.max_attempts;
    chat_ep.initial_backoff = std::chrono::milliseconds(a.backoff_ms);
    cfgu::EndpointConfig completion_ep = chat_ep;
    if (!a.completion_endpoint.empty()) completion_ep.base_url = a.completion_endpoint;
    const cfgu::OpenAIClient chat_client(chat_ep);
    const cfgu::OpenAIClient completion_client(completion_ep);

    cfgu::GenerationConfig gen;
    gen.chat_model = a.chat_model;
    gen.completion_model = a.completion_model;
    gen.temperature = a.temperature;
    gen.candidates_per_recipe = a.candidates_per_recipe;
    gen.workers = std::max(1, g.workers);
    generated = cfgu::generate_all(ordered, gen, chat_client, completion_client);
    if (generated.candidates.empty() && !generated.failures.empty()) {
      throw cfgu::ServiceError("no candidate could be generated; first failure: " + generated.failures.front().message);
    }
  }

  std::map<std::string, std::vector<cfgu::Candidate>> by_sample;
  for (const cfgu::Candidate& c : generated.candidates) by_sample[c.sample_key].push_back(c);

  const cfgu::LengthFn length = a.length_unit == "chars"
                                    ? cfgu::LengthFn([](std::string_view s) { return s.size(); })
                                    : cfgu::LengthFn(cfgu::word_count);
  const cfgu::LengthLimits limits{a.max_prompt, a.max_total};

  std::vector<cfgu::DropRecord> drops;
  const auto build_side = [&](const std::vector<cfgu::ExpandedSample>& side) {
    std::vector<cfgu::PreferenceTriple> triples;
    for (const cfgu::ExpandedSample& s : side) {
      const auto it = by_sample.find(s.key());
      const cfgu::TripleOutcome outcome = cfgu::build_triples(
          s, it == by_sample.end() ? std::vector<cfgu::Candidate>{} : it->second, detector, policy, a.cfg, a.eos);
      if (outcome.dropped) drops.push_back(*outcome.dropped);
      for (const cfgu::PreferenceTriple& t : outcome.triples) {
        cfgu::LengthOutcome fitted = cfgu::enforce_lengths(t, length, limits);
        if (!fitted.triple) {
          drops.push_back({s.key(), fitted.reason});
          continue;
        }
        cfgu::check_triple(*fitted.triple, detector, policy, a.eos);
        triples.push_back(std::move(*fitted.triple));
      }
    }
    return triples;
  };
  const std::vector<cfgu::PreferenceTriple> train = build_side(parts.train);
  const std::vector<cfgu::PreferenceTriple> test = build_side(parts.test);

  const fs::path out_dir = a.out_dir;
  fs::create_directories(out_dir);
  std::ostringstream train_text, test_text, cand_text, prompt_text;
  cfgu::write_jsonl(train_text, train);
  cfgu::write_jsonl(test_text, test);
  for (const cfgu::Candidate& c : generated.candidates) cand_text << cfgu::to_json(c).dump() << "\n";
  for (const cfgu::ExpandedSample& s : parts.test) {
    prompt_text << ordered_json{{"id", s.key()}, {"prompt", s.prompt_context}}.dump() << "\n";
  }

  ordered_json report;
  report["config"] = echo;
  report["counts"] = {{"dialogues", parsed.dialogues.size()},
                      {"skipped_records", parsed.errors.size()},
                      {"samples", samples.size()},
                      {"train_samples", parts.train.size()},
                      {"test_samples", parts.test.size()},
                      {"candidates", generated.candidates.size()},
                      {"generation_failures", generated.failures.size()},
                      {"train_triples", train.size()},
                      {"test_triples", test.size()},
                      {"dropped", drops.size()}};
  ordered_json skipped = ordered_json::array();
  for (const auto& e : parsed.errors) skipped.push_back({{"line", e.line}, {"error", e.message}});
  report["skipped_records"] = std::move(skipped);
  ordered_json drop_rows = ordered_json::array();
  for (const auto& d : drops) drop_rows.push_back({{"sample", d.sample_key}, {"reason", d.reason}});
  report["drops"] = std::move(drop_rows);
  ordered_json failures = ordered_json::array();
  for (const auto& f : generated.failures) {
    failures.push_back({{"sample", f.sample_key}, {"recipe", static_cast<int>(f.recipe)}, {"error", f.message}});
  }
  report["generation_failures"] = std::move(failures);

  write_text(out_dir / "train.jsonl", train_text.str());
  write_text(out_dir / "test.jsonl", test_text.str());
  write_text(out_dir / "test_prompts.jsonl", prompt_text.str());
  if (!a.offline) write_text(out_dir / "candidates.jsonl", cand_text.str());
  write_text(out_dir / "report.json", report.dump(2) + "\n");
  std::cerr << "train triples: " << train.size() << ", test triples: " << test.size() << ", dropped: " << drops.size()
            << "\n";
  return 0;
}

// --------------------------------------------------------------- orpo-loss

struct OrpoArgs {
  std::string input, out;
  double beta = 0.1;
  bool no_length_normalize = false;
};

int run_orpo(const OrpoArgs& a, const ordered_json& echo) {
  cfgu::OrpoConfig config;
  config.beta = a.beta;
  config.length_normalize = !a.no_length_normalize;

  auto in = open_in(a.input);
  ordered_json records = ordered_json::array();
  double sum_total = 0, sum_nll = 0, sum_or = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    cfgu::OrpoLoss loss;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      loss = cfgu::odds_ratio_loss(j.at("chosen_logprobs").get<std::vector<double>>(),
                                   j.at("rejected_logprobs").get<std::vector<double>>(), config);
    } catch (const nlohmann::json::exception& e) {
      throw cfgu::ParseError(a.input + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const cfgu::Error& e) {
      throw cfgu::InvalidInput(a.input + ":" + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back({{"line", line_no}, {"total", loss.total}, {"nll", loss.nll}, {"or_term", loss.or_term}});
    sum_total += loss.total;
    sum_nll += loss.nll;
    sum_or += loss.or_term;
  }
  const double n = static_cast<double>(records.size());
  ordered_json doc;
  doc["config"] = echo;
  doc["aggregate"] = {{"records", records.size()},
                      {"mean_total", n ? sum_total / n : 0.0},
                      {"mean_nll", n ? sum_nll / n : 0.0},
                      {"mean_or_term", n ? sum_or / n : 0.0}};
  doc["records"] = std::move(records);
  const std::string text = doc.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
  }
  return 0;
}

// -------------------------------------------------------------------- eval

struct EvalPiiArgs {
  std::string model, samples, gazetteers, out;
  std::string exclude_labels = "CARDINAL,DATE,PRODUCT,ORDINAL";
  GuidanceArgs guidance;
};

int run_eval_pii(const EvalPiiArgs& a, const Globals& g, const ordered_json& echo) {
  const cfgu::TabularLM model = cfgu::TabularLM::load(a.model);
  const cfgu::LabelPolicy policy = cfgu::LabelPolicy::from_list(a.exclude_labels);
  const cfgu::PiiDetector detector(cfgu::Gazetteers::load_dir(a.gazetteers));
  auto in = open_in(a.samples);
  const std::vector<cfgu::PromptRecord> samples = cfgu::read_prompts(in);

  cfgu::PiiEvalOptions options;
  options.guidance = a.guidance.spec();
  options.max_new_tokens = a.guidance.max_new_tokens;
  options.workers = g.workers;
  const cfgu::EvalReport report = cfgu::run_pii_eval(model, samples, options, detector, policy, echo);
  write_text(a.out, cfgu::to_json_text(report));
  std::cerr << "samples: " << report.totals.samples << ", total PII: " << report.totals.total_pii
            << ", samples with PII: " << report.totals.samples_with_pii << "\n";
  return 0;
}

struct EvalJudgeArgs {
  std::string items, endpoint = "https://api.openai.com", model = "gpt-4o-mini", out;
  int max_attempts = 3;
  int backoff_ms = 500;
};

int run_eval_judge(const EvalJudgeArgs& a, const ordered_json& echo) {
  auto in = open_in(a.items);
  const std::vector<cfgu::QaItem> items = cfgu::read_qa_items(in);
  cfgu::EndpointConfig ep;
  ep.base_url = a.endpoint;
  ep.api_key = cfgu::api_key_from_env();
  ep.max_attempts = a.max_attempts;
  ep.initial_backoff = std::chrono::milliseconds(a.backoff_ms);
  const cfgu::OpenAIClient client(ep);
  cfgu::JudgeOptions options;
  options.model = a.model;
  const cfgu::JudgeReport report = cfgu::run_judge_eval(items, client, options);

  std::size_t failed = 0;
  for (const auto& v : report.verdicts) failed += v.error ? 1 : 0;
  if (!items.empty() && failed == items.size()) {
    throw cfgu::ServiceError("judge endpoint failed for every item: " + *report.verdicts.front().error);
  }
  ordered_json doc;
  doc["config"] = echo;
  const ordered_json body = cfgu::to_json(report);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  const std::string text = doc.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
  }
  std::cerr << "correctness rate: " << report.correctness_rate << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfgu: PII unlearning toolkit (task-vector negation, preference datasets, guided decoding)"};
  app.config_formatter(std::make_shared<cfgu::cli::JsonConfig>());
  app.set_config("--config", "", "JSON config file; nested objects set subcommand options");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  Globals globals;
  app.add_option("--workers", globals.workers, "Parallel workers for decoding and API requests")
      ->check(CLI::PositiveNumber);

  SubtractArgs sub;
  auto* subtract = app.add_subcommand("subtract", "Negate a task vector: out = base - alpha * (finetuned - base)");
  subtract->option_defaults()->always_capture_default();
  subtract->add_option("--base", sub.base, "Base checkpoint (.safetensors)")->required();
  subtract->add_option("--finetuned", sub.finetuned, "Fine-tuned checkpoint (.safetensors)")->required();
  subtract->add_option("--alpha", sub.alpha, "Negation coefficient");
  subtract->add_flag("--relu", sub.relu, "Keep one sign of the delta before negating");
  subtract->add_option("--relu-sign", sub.relu_sign, "Sign kept by --relu: positive (max(0, d)) or negative")
      ->check(CLI::IsMember({"positive", "negative"}));
  subtract->add_option("--out", sub.out, "Output checkpoint")->required();

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Guided decoding with a tabular model");
  generate->option_defaults()->always_capture_default();
  generate->add_option("--model", gen.model, "Tabular model JSON")->required();
  generate->add_option("--prompts", gen.prompts, "JSONL of {\"id\", \"prompt\"}")->required();
  gen.guidance.attach(generate);
  generate->add_option("--mode", gen.mode, "greedy or sample")->check(CLI::IsMember({"greedy", "sample"}));
  generate->add_option("--seed", gen.seed, "Sampling seed (prompt i uses seed + i)");
  generate->add_flag("--trace", gen.trace, "Include per-step positive/negative/combined scores");
  generate->add_option("--out", gen.out, "Output JSON")->required();

  BuildArgs build;
  auto* build_dataset = app.add_subcommand("build-dataset", "Build PII preference triples from dialogues");
  build_dataset->option_defaults()->always_capture_default();
  build_dataset->add_option("--dialogues", build.dialogues, "Dialogue JSONL")->required();
  build_dataset->add_option("--gazetteers", build.gazetteers, "Gazetteer directory")->required();
  build_dataset->add_option("--exclude-labels", build.exclude_labels, "Entity labels that do not count as PII");
  build_dataset->add_flag("--cfg", build.cfg, "Add the two system-prompt condition triples per pair");
  build_dataset->add_option("--out-dir", build.out_dir, "Output directory")->required();
  build_dataset->add_option("--endpoint", build.endpoint, "OpenAI-compatible base URL (chat mode)");
  build_dataset->add_option("--completion-endpoint", build.completion_endpoint,
                            "Base URL for completion mode (defaults to --endpoint)");
  build_dataset->add_option("--chat-model", build.chat_model, "Model for chat-mode recipes");
  build_dataset->add_option("--completion-model", build.completion_model, "Model for completion-mode recipes");
  build_dataset->add_option("--temperature", build.temperature, "Sampling temperature for candidate generation");
  build_dataset->add_option("--candidates-per-recipe", build.candidates_per_recipe, "Requests per recipe per sample")
      ->check(CLI::PositiveNumber);
  build_dataset->add_option("--max-attempts", build.max_attempts, "Attempts per request")->check(CLI::PositiveNumber);
  build_dataset->add_option("--backoff-ms", build.backoff_ms, "Initial retry backoff in milliseconds")
      ->check(CLI::NonNegativeNumber);
  build_dataset->add_flag("--offline", build.offline, "Use --candidate-cache instead of the network");
  build_dataset->add_option("--candidate-cache", build.candidate_cache, "Candidates JSONL from an earlier run");
  build_dataset->add_option("--split-ratio", build.split_ratio, "Fraction of dialogues in train")
      ->check(CLI::Range(0.0, 1.0));
  build_dataset->add_option("--seed", build.seed, "Split seed");
  build_dataset->add_option("--eos", build.eos, "EOS marker appended to chosen and rejected");
  build_dataset->add_option("--max-prompt", build.max_prompt, "Prompt length limit");
  build_dataset->add_option("--max-total", build.max_total, "Prompt + completion length limit");
  build_dataset->add_option("--length-unit", build.length_unit, "words or chars")
      ->check(CLI::IsMember({"words", "chars"}));

  OrpoArgs orpo;
  auto* orpo_loss = app.add_subcommand("orpo-loss", "ORPO loss values from per-token log-probs");
  orpo_loss->option_defaults()->always_capture_default();
  orpo_loss->add_option("--input", orpo.input, "JSONL of {\"chosen_logprobs\", \"rejected_logprobs\"}")->required();
  orpo_loss->add_option("--beta", orpo.beta, "Odds-ratio weight")->check(CLI::PositiveNumber);
  orpo_loss->add_flag("--no-length-normalize", orpo.no_length_normalize, "Use summed instead of mean log-probs");
  orpo_loss->add_option("--out", orpo.out, "Output JSON (default stdout)");

  auto* eval = app.add_subcommand("eval", "Evaluation");
  eval->require_subcommand(1);
  EvalPiiArgs pii;
  auto* eval_pii = eval->add_subcommand("pii", "Greedy guided decoding + PII counting");
  eval_pii->option_defaults()->always_capture_default();
  eval_pii->add_option("--model", pii.model, "Tabular model JSON")->required();
  eval_pii->add_option("--samples", pii.samples, "JSONL of {\"id\", \"prompt\"}")->required();
  pii.guidance.attach(eval_pii);
  eval_pii->add_option("--gazetteers", pii.gazetteers, "Gazetteer directory")->required();
  eval_pii->add_option("--exclude-labels", pii.exclude_labels, "Entity labels that do not count as PII");
  eval_pii->add_option("--out", pii.out, "Report JSON")->required();

  EvalJudgeArgs judge;
  auto* eval_judge = eval->add_subcommand("judge", "Score answers with an LLM judge");
  eval_judge->option_defaults()->always_capture_default();
  eval_judge->add_option("--items", judge.items, "JSONL of {\"id\", \"question\", \"correct_answer\", \"answer\"}")
      ->required();
  eval_judge->add_option("--endpoint", judge.endpoint, "OpenAI-compatible base URL");
  eval_judge->add_option("--model", judge.model, "Judge model");
  eval_judge->add_option("--max-attempts", judge.max_attempts, "Attempts per request")->check(CLI::PositiveNumber);
  eval_judge->add_option("--backoff-ms", judge.backoff_ms, "Initial retry backoff in milliseconds")
      ->check(CLI::NonNegativeNumber);
  eval_judge->add_option("--out", judge.out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (subtract->parsed()) return run_subtract(sub, config_echo(app, *subtract));
    if (generate->parsed()) return run_generate(gen, globals, config_echo(app, *generate));
    if (build_dataset->parsed()) return run_build_dataset(build, globals, config_echo(app, *build_dataset));
    if (orpo_loss->parsed()) return run_orpo(orpo, config_echo(app, *orpo_loss));
    if (eval_pii->parsed()) return run_eval_pii(pii, globals, config_echo(app, *eval_pii));
    if (eval_judge->parsed()) return run_eval_judge(judge, config_echo(app, *eval_judge));
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cfgu::ServiceError& e) {
    std::cerr << "service error: " << e.what() << "\n";
    return kExitService;
  } catch (const cfgu::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
