// watersearch command-line front end.
//
// Exit codes: 0 success, 2 usage or input errors, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "watersearch/watersearch.hpp"

namespace ws = watersearch;

namespace {

constexpr int kUsageExit = 2;

struct WatermarkFlags {
  double gamma = 0.25;
  double delta = 4.0;
  std::string scheme = "soft";
  int h = 1;
  std::uint64_t key = 41;
  std::uint64_t modulus = ws::kMersenne61;
  std::size_t pool_size = 5000;

  ws::WatermarkConfig config() const {
    ws::WatermarkConfig c;
    c.gamma = gamma;
    c.delta = delta;
    c.scheme = ws::parse_scheme(scheme);
    c.h = h;
    c.master_key = key;
    c.modulus = modulus;
    c.pool_size = pool_size;
    c.validate();
    return c;
  }
};

struct SearchFlags {
  std::size_t chunk_size = 20;
  std::size_t beams = 5;
  double alpha = 0.75;
  std::size_t max_tokens = 200;
  std::string similarity = "rouge_l";
  double beta = 1.0;

  ws::SearchConfig config() const {
    ws::SearchConfig c;
    c.chunk_size = chunk_size;
    c.beams = beams;
    c.alpha = alpha;
    c.max_tokens = max_tokens;
    c.similarity.kind = ws::parse_similarity(similarity);
    c.similarity.beta = beta;
    c.validate();
    return c;
  }
};

void add_watermark_flags(CLI::App* app, WatermarkFlags& f) {
  app->add_option("--gamma", f.gamma, "Green-list fraction")->capture_default_str();
  app->add_option("--delta", f.delta, "Green logit bias")->capture_default_str();
  app->add_option("--scheme", f.scheme, "none|hard|soft|unigram|window_min")->capture_default_str();
  app->add_option("--context-width", f.h, "Preceding tokens hashed into each token seed (h)")->capture_default_str();
  app->add_option("--key", f.key, "Master key")->capture_default_str();
  app->add_option("--modulus", f.modulus, "Prime modulus of the token seed")->capture_default_str();
  app->add_option("--pool-size", f.pool_size, "Seed pool size")->capture_default_str();
}

void add_search_flags(CLI::App* app, SearchFlags& f, bool generation) {
  app->add_option("--chunk-size,-m", f.chunk_size, "Tokens per chunk")->capture_default_str();
  app->add_option("--beams,-k", f.beams, "Reference plus watermarked candidates")->capture_default_str();
  if (!generation) return;
  app->add_option("--alpha", f.alpha, "Similarity weight of the selection score")->capture_default_str();
  app->add_option("--max-tokens,-T", f.max_tokens, "Tokens to generate")->capture_default_str();
  app->add_option("--similarity", f.similarity, "rouge_l|bow_cosine")->capture_default_str();
  app->add_option("--beta", f.beta, "ROUGE-L recall weight")->capture_default_str();
}

ws::NGramModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ws::InputError("cannot open model '" + path + "'");
  return ws::read_model(in);
}

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return ws::read_file(path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ws::InputError("cannot write '" + path + "'");
  out << text;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ws::InputError("cannot write '" + path + "'");
  return out;
}

// Every run echoes the configuration it used, so it can be replayed.
void echo_config(const std::string& command, const ws::json& cfg) {
  std::cerr << "# watersearch " << command << " config: " << ws::json{{"schema_version", ws::kSchemaVersion},
                                                                       {"command", command},
                                                                       {"config", cfg}}
                                                                 .dump()
            << '\n';
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw ws::ConfigError("cannot parse number '" + item + "' in list '" + s + "'");
    }
  }
  if (out.empty()) throw ws::ConfigError("empty list '" + s + "'");
  return out;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  bool synthetic = false;
  ws::SyntheticCorpusOptions synth;
  int order = 2;
  double smoothing = 0.001;
  std::string eos;
  std::string out;
  std::string corpus_out;
  std::string synonyms_out;
};

int cmd_train(const TrainArgs& a) {
  if (a.corpus.empty() == !a.synthetic) throw ws::ConfigError("give exactly one of --corpus or --synthetic");
  std::vector<std::string> lines;
  if (a.synthetic) {
    lines = ws::synthetic_corpus(a.synth);
  } else {
    std::istringstream in(ws::read_file(a.corpus));
    for (std::string line; std::getline(in, line);) lines.push_back(line);
  }
  ws::NGramTrainOptions opts;
  opts.order = a.order;
  opts.smoothing_k = a.smoothing;
  if (!a.eos.empty()) opts.eos_token = a.eos;
  const auto model = ws::train_ngram(lines, opts);
  echo_config("train-model", {{"corpus", a.synthetic ? "synthetic" : a.corpus},
                              {"synthetic_seed", a.synth.seed},
                              {"synthetic_vocab", a.synth.vocab_size},
                              {"order", a.order},
                              {"smoothing_k", a.smoothing}});
  auto out = open_out(a.out);
  ws::write_model(out, model);
  if (!a.corpus_out.empty()) {
    auto c = open_out(a.corpus_out);
    for (const auto& l : lines) c << l << '\n';
  }
  if (!a.synonyms_out.empty()) {
    std::vector<ws::TokenSeq> docs;
    for (const auto& l : lines) docs.push_back(model.vocab().encode(l));
    auto s = open_out(a.synonyms_out);
    ws::write_synonyms(s, ws::build_synonyms(docs), model.vocab());
  }
  std::cerr << "vocabulary " << model.vocab().size() << ", order " << model.order() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string model;
  std::string prompt;
  std::string prompt_file;
  std::string out = "-";
  std::string trace;
  std::uint64_t rng_seed = 1;
  WatermarkFlags wm;
  SearchFlags search;
  bool baseline = false;
};

ws::TokenSeq resolve_prompt(const ws::Vocabulary& vocab, const std::string& text, const std::string& file) {
  if (!text.empty() && !file.empty()) throw ws::ConfigError("give only one of --prompt or --prompt-file");
  if (text.empty() && file.empty()) throw ws::ConfigError("a prompt is required (--prompt or --prompt-file)");
  return vocab.encode(text.empty() ? ws::read_file(file) : text);
}

int cmd_generate(const GenerateArgs& a, unsigned threads) {
  const auto model = load_model(a.model);
  const auto wm = a.wm.config();
  const auto search = a.search.config();
  const auto prompt = resolve_prompt(model.vocab(), a.prompt, a.prompt_file);
  echo_config("generate", {{"watermark", ws::to_json(wm)},
                           {"search", ws::to_json(search)},
                           {"rng_seed", a.rng_seed},
                           {"baseline", a.baseline},
                           {"model", a.model}});
  ws::TokenSeq output;
  if (a.baseline) {
    output = ws::kgw_generate(model, prompt, wm, search.max_tokens, a.rng_seed);
  } else {
    const auto trace = ws::watersearch_generate(model, prompt, wm, search, a.rng_seed, threads);
    output = trace.output();
    if (!a.trace.empty()) open_out(a.trace) << ws::to_json(trace).dump(1) << '\n';
  }
  const auto text = model.vocab().decode(output);
  write_text(a.out, text.empty() ? text : text + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
  std::string model;
  std::string text = "-";
  std::string prompt;
  std::string prompt_file;
  double threshold = ws::kDefaultThreshold;
  WatermarkFlags wm;
  SearchFlags search;
  bool baseline = false;
};

int cmd_detect(const DetectArgs& a, unsigned threads) {
  const auto model = load_model(a.model);
  const auto wm = a.wm.config();
  const auto search = a.search.config();
  const auto tokens = model.vocab().encode(read_text(a.text));
  if (tokens.empty()) throw ws::InputError("input text is empty");
  std::optional<ws::TokenSeq> prompt;
  if (!a.prompt.empty() || !a.prompt_file.empty()) prompt = resolve_prompt(model.vocab(), a.prompt, a.prompt_file);
  std::optional<std::span<const ws::TokenId>> pre;
  if (prompt) pre = std::span<const ws::TokenId>(*prompt);
  echo_config("detect", {{"watermark", {{"gamma", wm.gamma},
                                        {"scheme", ws::to_string(wm.scheme)},
                                        {"h", wm.h},
                                        {"pool_size", wm.pool_size},
                                        {"modulus", wm.modulus}}},
                         {"beams", search.beams},
                         {"chunk_size", search.chunk_size},
                         {"threshold", a.threshold},
                         {"baseline", a.baseline},
                         {"prompt_supplied", prompt.has_value()}});
  if (a.baseline) {
    const double z = ws::baseline_zscore(tokens, pre, wm);
    const double p = ws::normal_sf(z);
    std::cout << ws::json{{"schema_version", ws::kSchemaVersion},
                          {"kind", "baseline_detection"},
                          {"z", z},
                          {"p_value", p},
                          {"threshold", a.threshold},
                          {"verdict", p < a.threshold ? "watermarked" : "not_watermarked"}}
                     .dump(1)
              << '\n';
    return 0;
  }
  const auto report = ws::detect_document(tokens, pre, wm, search, a.threshold, nullptr, threads);
  std::cout << ws::to_json(report).dump(1) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct AttackArgs {
  std::string model;
  std::string text = "-";
  std::string out = "-";
  std::string kind;
  double rate = 0.0;
  std::uint64_t seed = 1;
  std::string synonyms;
};

int cmd_attack(const AttackArgs& a) {
  const auto kind = ws::parse_attack(a.kind);
  if (!(a.rate >= 0.0 && a.rate <= 1.0)) throw ws::ConfigError("--rate must lie in [0, 1]");
  const auto model = load_model(a.model);
  const auto tokens = model.vocab().encode(read_text(a.text));
  ws::SplitMix64 rng(a.seed);
  ws::SynonymDictionary dict;
  if (kind == ws::AttackKind::kSynonym) {
    if (a.synonyms.empty()) throw ws::ConfigError("synonym attack needs --synonyms");
    std::ifstream in(a.synonyms);
    if (!in) throw ws::InputError("cannot open '" + a.synonyms + "'");
    dict = ws::read_synonyms(in, model.vocab());
  }
  const ws::AttackSpec spec{kind, a.rate, &dict};
  const auto out = ws::apply_attack(tokens, spec, model.vocab().size(), rng);
  echo_config("attack", {{"attack", ws::to_string(kind)},
                         {"rate", a.rate},
                         {"seed", a.seed},
                         {"tokens_in", tokens.size()},
                         {"tokens_out", out.size()}});
  const auto text = model.vocab().decode(out);
  write_text(a.out, text.empty() ? text : text + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string corpus;
  std::size_t trials = 100;
  std::string method = "watersearch";
  std::string sweep = "none";
  std::string alphas = "0,0.25,0.5,0.75,1";
  std::string beams_list = "2,3,4,5,6";
  std::string gammas = "0.25,0.5";
  std::string deltas = "1,2,4";
  std::string chunk_sizes = "20,40,60,80";
  std::string attack;
  std::string rates = "0.3,0.4,0.5,0.6,0.7,0.8";
  std::string synonyms;
  double threshold = ws::kDefaultThreshold;
  double target_tpr = 0.95;
  bool no_prompt = false;
  std::uint64_t rng_seed = 1;
  std::string out = "-";
  std::string roc;
  WatermarkFlags wm;
  SearchFlags search;
};

std::vector<ws::TokenSeq> corpus_prompts(const std::string& path, const ws::Vocabulary& vocab, int h) {
  std::ifstream in(path);
  if (!in) throw ws::InputError("cannot open corpus '" + path + "'");
  std::vector<ws::TokenSeq> prompts;
  for (const auto& d : ws::read_corpus(in)) {
    auto p = vocab.encode(d.prompt);
    if (p.size() < static_cast<std::size_t>(h))
      throw ws::InputError("prompt of document '" + d.id + "' is shorter than h");
    prompts.push_back(std::move(p));
  }
  if (prompts.empty()) throw ws::InputError("corpus has no documents");
  return prompts;
}

int cmd_evaluate(const EvaluateArgs& a, unsigned threads) {
  if (a.trials == 0) throw ws::ConfigError("--trials must be >= 1");
  if (a.trials < 10) std::cerr << "warning: fewer than 10 trials; rates will be noisy\n";
  const auto model = load_model(a.model);
  ws::EvalConfig base;
  base.method = a.method == "baseline" || a.method == "kgw" ? ws::Method::kKgwBaseline
                : a.method == "watersearch"                 ? ws::Method::kWaterSearch
                    : throw ws::ConfigError("unknown method '" + a.method + "'");
  base.watermark = a.wm.config();
  base.search = a.search.config();
  base.trials = a.trials;
  base.threshold = a.threshold;
  base.use_prompt = !a.no_prompt;
  base.rng_seed = a.rng_seed;

  std::vector<ws::TokenSeq> prompts;
  if (!a.corpus.empty()) {
    prompts = corpus_prompts(a.corpus, model.vocab(), base.watermark.h);
  } else {
    // Without a corpus, prompts are short random vocabulary spans.
    ws::SplitMix64 rng(a.rng_seed ^ 0x9E37);
    for (int i = 0; i < 32; ++i) {
      ws::TokenSeq p(static_cast<std::size_t>(base.watermark.h) + 1);
      for (auto& t : p) t = static_cast<ws::TokenId>(rng.below(model.vocab().size()));
      prompts.push_back(p);
    }
  }

  ws::SynonymDictionary dict;
  if (!a.synonyms.empty()) {
    std::ifstream in(a.synonyms);
    if (!in) throw ws::InputError("cannot open '" + a.synonyms + "'");
    dict = ws::read_synonyms(in, model.vocab());
  }

  std::vector<ws::EvalConfig> grid;
  if (a.sweep == "none") {
    grid.push_back(base);
  } else if (a.sweep == "alpha") {
    for (double v : parse_list(a.alphas)) grid.push_back(base), grid.back().search.alpha = v;
  } else if (a.sweep == "beams") {
    for (double v : parse_list(a.beams_list)) grid.push_back(base), grid.back().search.beams = static_cast<std::size_t>(v);
  } else if (a.sweep == "chunk") {
    for (double v : parse_list(a.chunk_sizes))
      grid.push_back(base), grid.back().search.chunk_size = static_cast<std::size_t>(v);
  } else if (a.sweep == "gamma-delta") {
    for (double g : parse_list(a.gammas))
      for (double d : parse_list(a.deltas))
        for (double al : parse_list(a.alphas)) {
          grid.push_back(base);
          grid.back().watermark.gamma = g;
          grid.back().watermark.delta = d;
          grid.back().search.alpha = al;
        }
  } else if (a.sweep == "attack") {
    if (a.attack.empty()) throw ws::ConfigError("attack sweep needs --attack");
    const auto kind = ws::parse_attack(a.attack);
    if (kind == ws::AttackKind::kSynonym && a.synonyms.empty())
      throw ws::ConfigError("synonym attack needs --synonyms");
    for (double r : parse_list(a.rates)) {
      if (!(r >= 0.0 && r <= 1.0)) throw ws::ConfigError("attack rates must lie in [0, 1]");
      grid.push_back(base);
      grid.back().attack = ws::AttackSpec{kind, r, &dict};
    }
  } else {
    throw ws::ConfigError("unknown sweep '" + a.sweep + "' (none|alpha|beams|chunk|gamma-delta|attack)");
  }
  for (const auto& g : grid) {
    g.watermark.validate();
    g.search.validate();
  }

  echo_config("evaluate", {{"watermark", ws::to_json(base.watermark)},
                           {"search", ws::to_json(base.search)},
                           {"method", a.method},
                           {"sweep", a.sweep},
                           {"trials", a.trials},
                           {"threshold", a.threshold},
                           {"use_prompt", base.use_prompt},
                           {"rng_seed", a.rng_seed},
                           {"corpus", a.corpus}});

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (a.out != "-") file = open_out(a.out), os = &file;
  ws::CsvWriter csv(*os);
  csv.row(std::vector<std::string>{"schema_version", "method", "scheme", "gamma", "delta", "beams", "chunk_size",
                                   "alpha", "attack", "rate", "trials", "tpr", "tnr", "median_p", "auc",
                                   "mean_green_fraction", "mean_similarity", "ms_per_1k_tokens"});
  std::ofstream roc_file;
  std::unique_ptr<ws::CsvWriter> roc;
  if (!a.roc.empty()) {
    roc_file = open_out(a.roc);
    roc = std::make_unique<ws::CsvWriter>(roc_file);
    roc->row(std::vector<std::string>{"schema_version", "config_index", "threshold", "fpr", "tpr"});
  }

  std::optional<std::size_t> best;
  std::vector<ws::EvalResult> results;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& g = grid[i];
    const auto r = ws::evaluate(model, prompts, g, threads);
    csv.row(std::string(ws::kSchemaVersion), a.method, std::string(ws::to_string(g.watermark.scheme)), g.watermark.gamma,
            g.watermark.delta, g.search.beams, g.search.chunk_size, g.search.alpha,
            std::string(g.attack ? ws::to_string(g.attack->kind) : "none"), g.attack ? g.attack->rate : 0.0, g.trials,
            r.tpr, r.tnr, r.median_p, r.auc, r.mean_green_fraction, r.mean_similarity, r.ms_per_1k_tokens);
    os->flush();
    if (roc)
      for (const auto& pt : r.roc) roc->row(std::string(ws::kSchemaVersion), i, pt.threshold, pt.fpr, pt.tpr);
    // Among configurations meeting the target TPR, prefer the largest alpha.
    if (r.tpr >= a.target_tpr && (!best || g.search.alpha > grid[*best].search.alpha)) best = i;
    results.push_back(r);
  }
  if (grid.size() > 1) {
    if (best) {
      const auto& g = grid[*best];
      std::cerr << "selected: gamma=" << g.watermark.gamma << " delta=" << g.watermark.delta
                << " alpha=" << g.search.alpha << " beams=" << g.search.beams << " tpr=" << results[*best].tpr
                << '\n';
    } else {
      std::cerr << "selected: none reaches tpr >= " << a.target_tpr << '\n';
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct NullArgs {
  ws::NullSimConfig cfg;
  std::string out = "-";
  WatermarkFlags wm;
  SearchFlags search;
};

int cmd_simulate_null(NullArgs a, unsigned threads) {
  if (a.cfg.trials == 0) throw ws::ConfigError("--trials must be >= 1");
  a.cfg.watermark = a.wm.config();
  a.cfg.search = a.search.config();
  echo_config("simulate-null", {{"watermark", ws::to_json(a.cfg.watermark)},
                                {"beams", a.cfg.search.beams},
                                {"chunk_size", a.cfg.search.chunk_size},
                                {"trials", a.cfg.trials},
                                {"doc_length", a.cfg.doc_length},
                                {"vocab_size", a.cfg.vocab_size},
                                {"use_prompt", a.cfg.use_prompt},
                                {"rng_seed", a.cfg.rng_seed}});
  auto p = ws::simulate_null(a.cfg, threads);
  std::sort(p.begin(), p.end());

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (a.out != "-") file = open_out(a.out), os = &file;
  ws::CsvWriter csv(*os);
  csv.row(std::vector<std::string>{"schema_version", "rank", "p_value", "ecdf"});
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    csv.row(std::string(ws::kSchemaVersion), i + 1, p[i], static_cast<double>(i + 1) / n);

  for (double t : {0.001, 0.01, 0.05, 0.1}) {
    const auto fp = std::count_if(p.begin(), p.end(), [t](double x) { return x < t; });
    std::cerr << "fpr@" << t << " = " << static_cast<double>(fp) / n << '\n';
  }
  const auto ks = ws::ks_uniform(p);
  std::cerr << "ks_excess_p = " << ks.p_excess << ", ks_two_sided_p = " << ks.p_two_sided << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TheoryArgs {
  std::string c = "0.5,1,2,4";
  std::string green_mass = "0.1,0.25,0.5,0.75";
  std::string alpha = "0.25,0.5,0.75,0.9";
  double f_scale = 1.0;
  std::size_t resolution = 10000;
  double tol = 1e-6;
  std::string tabulated;
  std::string out = "-";
};

int cmd_theory(const TheoryArgs& a) {
  namespace th = ws::theory;
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (a.out != "-") file = open_out(a.out), os = &file;
  ws::CsvWriter csv(*os);
  csv.row(std::vector<std::string>{"schema_version", "family", "c", "green_mass", "alpha", "f_scale", "omega",
                                   "r_micro", "r_macro", "closed_form", "gap", "boundary", "unique", "ok"});
  echo_config("theory", {{"c", a.c},
                         {"green_mass", a.green_mass},
                         {"alpha", a.alpha},
                         {"f_scale", a.f_scale},
                         {"resolution", a.resolution},
                         {"tol", a.tol},
                         {"tabulated", a.tabulated}});

  std::vector<double> tab_r, tab_v;
  if (!a.tabulated.empty()) {
    std::istringstream in(ws::read_file(a.tabulated));
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ws::InputError("tabulated curve lines must be 'r,value'");
      tab_r.push_back(std::stod(line.substr(0, comma)));
      tab_v.push_back(std::stod(line.substr(comma + 1)));
    }
  }

  bool all_ok = true;
  const auto cs = a.tabulated.empty() ? parse_list(a.c) : std::vector<double>{std::nan("")};
  for (double c : cs)
    for (double pg : parse_list(a.green_mass))
      for (double al : parse_list(a.alpha)) {
        const auto fam = a.tabulated.empty() ? th::TradeoffFamily::quadratic(c, pg, al, a.f_scale)
                                             : th::TradeoffFamily::tabulated(tab_r, tab_v, pg, al);
        const auto chk = th::verify_shared_maximizer(fam, a.resolution, a.tol);
        const double closed =
            a.tabulated.empty() ? std::clamp(chk.omega * (1.0 - pg) / c, th::kEdge, 1.0 - th::kEdge) : std::nan("");
        csv.row(std::string(ws::kSchemaVersion), std::string(a.tabulated.empty() ? "quadratic" : "tabulated"), c, pg,
                al, a.f_scale, chk.omega, chk.r_micro, chk.r_macro, closed, chk.gap, chk.boundary ? 1 : 0,
                chk.unique ? 1 : 0, chk.ok ? 1 : 0);
        all_ok = all_ok && chk.ok;
      }
  std::cerr << (all_ok ? "all families share the maximizer\n" : "some families FAILED the maximizer check\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WaterSearch: chunked candidate-search text watermarking on toy n-gram models"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);
  unsigned threads = ws::default_threads();
  app.add_option("--threads", threads, "Worker threads (default: WATERSEARCH_THREADS or hardware)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-model", "Train an n-gram model");
  train_cmd->add_option("--corpus", train.corpus, "Plain-text corpus, one document per line");
  train_cmd->add_flag("--synthetic", train.synthetic, "Use the built-in synthetic corpus");
  train_cmd->add_option("--synthetic-vocab", train.synth.vocab_size)->capture_default_str();
  train_cmd->add_option("--synthetic-docs", train.synth.documents)->capture_default_str();
  train_cmd->add_option("--synthetic-length", train.synth.doc_length)->capture_default_str();
  train_cmd->add_option("--synthetic-seed", train.synth.seed)->capture_default_str();
  train_cmd->add_option("--order", train.order, "Context length")->capture_default_str();
  train_cmd->add_option("--smoothing", train.smoothing, "Add-k smoothing")->capture_default_str();
  train_cmd->add_option("--eos", train.eos, "End-of-sequence token appended to every document");
  train_cmd->add_option("--out,-o", train.out, "Model file")->required();
  train_cmd->add_option("--corpus-out", train.corpus_out, "Also write the training text");
  train_cmd->add_option("--synonyms-out", train.synonyms_out, "Also write a co-occurrence synonym dictionary");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Generate watermarked text");
  gen_cmd->add_option("--model", gen.model, "Model file")->required();
  gen_cmd->add_option("--prompt", gen.prompt, "Prompt text");
  gen_cmd->add_option("--prompt-file", gen.prompt_file, "Prompt file");
  gen_cmd->add_option("--out,-o", gen.out, "Output text file ('-' for stdout)")->capture_default_str();
  gen_cmd->add_option("--trace", gen.trace, "Generation trace JSON");
  gen_cmd->add_option("--rng-seed", gen.rng_seed, "Sampling seed")->capture_default_str();
  gen_cmd->add_flag("--baseline", gen.baseline, "Single-seed KGW generation without search");
  add_watermark_flags(gen_cmd, gen.wm);
  add_search_flags(gen_cmd, gen.search, true);

  DetectArgs det;
  auto* det_cmd = app.add_subcommand("detect", "Detect a watermark; prints a JSON report");
  det_cmd->add_option("--model", det.model, "Model file (for the vocabulary)")->required();
  det_cmd->add_option("--text", det.text, "Text file ('-' for stdin)")->capture_default_str();
  det_cmd->add_option("--prompt", det.prompt, "Prompt text");
  det_cmd->add_option("--prompt-file", det.prompt_file, "Prompt file");
  det_cmd->add_option("--threshold", det.threshold, "Document p-value threshold")->capture_default_str();
  det_cmd->add_flag("--baseline", det.baseline, "Single-seed z-test instead of the chunked test");
  add_watermark_flags(det_cmd, det.wm);
  add_search_flags(det_cmd, det.search, false);

  AttackArgs atk;
  auto* atk_cmd = app.add_subcommand("attack", "Perturb a text");
  atk_cmd->add_option("--model", atk.model, "Model file (for the vocabulary)")->required();
  atk_cmd->add_option("--text", atk.text, "Text file ('-' for stdin)")->capture_default_str();
  atk_cmd->add_option("--out,-o", atk.out)->capture_default_str();
  atk_cmd->add_option("--attack", atk.kind, "insert|synonym|delete")->required();
  atk_cmd->add_option("--rate", atk.rate, "Per-token operation rate in [0, 1]")->required();
  atk_cmd->add_option("--seed", atk.seed)->capture_default_str();
  atk_cmd->add_option("--synonyms", atk.synonyms, "Synonym dictionary (token TAB syn,syn)");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "TPR/TNR/ROC over generated texts; CSV output");
  ev_cmd->add_option("--model", ev.model, "Model file")->required();
  ev_cmd->add_option("--corpus", ev.corpus, "JSONL prompts {id, prompt, reference?}");
  ev_cmd->add_option("--trials,-n", ev.trials)->capture_default_str();
  ev_cmd->add_option("--method", ev.method, "watersearch|baseline")->capture_default_str();
  ev_cmd->add_option("--sweep", ev.sweep, "none|alpha|beams|chunk|gamma-delta|attack")->capture_default_str();
  ev_cmd->add_option("--alphas", ev.alphas)->capture_default_str();
  ev_cmd->add_option("--beams-list", ev.beams_list)->capture_default_str();
  ev_cmd->add_option("--chunk-sizes", ev.chunk_sizes)->capture_default_str();
  ev_cmd->add_option("--gammas", ev.gammas)->capture_default_str();
  ev_cmd->add_option("--deltas", ev.deltas)->capture_default_str();
  ev_cmd->add_option("--attack", ev.attack, "insert|synonym|delete (attack sweep)");
  ev_cmd->add_option("--rates", ev.rates)->capture_default_str();
  ev_cmd->add_option("--synonyms", ev.synonyms);
  ev_cmd->add_option("--threshold", ev.threshold)->capture_default_str();
  ev_cmd->add_option("--target-tpr", ev.target_tpr, "Report the max-alpha config reaching this TPR")
      ->capture_default_str();
  ev_cmd->add_flag("--no-prompt", ev.no_prompt, "Detect without the prompt as context");
  ev_cmd->add_option("--rng-seed", ev.rng_seed)->capture_default_str();
  ev_cmd->add_option("--out,-o", ev.out)->capture_default_str();
  ev_cmd->add_option("--roc", ev.roc, "Also write ROC points to this CSV");
  add_watermark_flags(ev_cmd, ev.wm);
  add_search_flags(ev_cmd, ev.search, true);

  NullArgs nul;
  auto* nul_cmd = app.add_subcommand("simulate-null", "Document p-values of random token sequences; CSV output");
  nul_cmd->add_option("--trials,-n", nul.cfg.trials)->capture_default_str();
  nul_cmd->add_option("--doc-length", nul.cfg.doc_length)->capture_default_str();
  nul_cmd->add_option("--vocab-size", nul.cfg.vocab_size)->capture_default_str();
  nul_cmd->add_flag("--with-prompt", nul.cfg.use_prompt, "Give the detector h random prompt tokens");
  nul_cmd->add_option("--rng-seed", nul.cfg.rng_seed)->capture_default_str();
  nul_cmd->add_option("--out,-o", nul.out)->capture_default_str();
  add_watermark_flags(nul_cmd, nul.wm);
  add_search_flags(nul_cmd, nul.search, false);

  TheoryArgs th;
  auto* th_cmd = app.add_subcommand("theory", "Check that the micro and macro objectives share a maximizer");
  th_cmd->add_option("--c", th.c, "Quadratic curvatures")->capture_default_str();
  th_cmd->add_option("--green-mass", th.green_mass, "P_G values")->capture_default_str();
  th_cmd->add_option("--alpha", th.alpha, "Alpha values")->capture_default_str();
  th_cmd->add_option("--f-scale", th.f_scale, "Slope of the linear f")->capture_default_str();
  th_cmd->add_option("--resolution", th.resolution)->capture_default_str();
  th_cmd->add_option("--tol", th.tol)->capture_default_str();
  th_cmd->add_option("--tabulated", th.tabulated, "CSV of r,value pairs for the quality curve");
  th_cmd->add_option("--out,-o", th.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }
  if (threads == 0) threads = 1;

  try {
    if (*train_cmd) return cmd_train(train);
    if (*gen_cmd) return cmd_generate(gen, threads);
    if (*det_cmd) return cmd_detect(det, threads);
    if (*atk_cmd) return cmd_attack(atk);
    if (*ev_cmd) return cmd_evaluate(ev, threads);
    if (*nul_cmd) return cmd_simulate_null(nul, threads);
    if (*th_cmd) return cmd_theory(th);
  } catch (const ws::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const ws::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const ws::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
