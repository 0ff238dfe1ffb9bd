#include "xmm/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "xmm/benchmark.hpp"
#include "xmm/clustering.hpp"
#include "xmm/error.hpp"
#include "xmm/eval.hpp"
#include "xmm/matching.hpp"
#include "xmm/parallel.hpp"
#include "xmm/synth.hpp"
#include "xmm/text_format.hpp"
#include "xmm/trainer.hpp"

namespace xmm::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

// Raised after parsing for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

Modality parse_modality_tag(const std::string& tag) {
  return tag == "r" ? Modality::Infrared : Modality::Visible;
}

// ---- manifest ------------------------------------------------------------

// Ordered key=value lines; '#' starts a comment line.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
  }

  std::string to_text() const {
    std::string out = "# xmm run manifest\n";
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

  static Manifest parse(const std::string& text) {
    Manifest m;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ParseError("manifest line " + std::to_string(line_no) + ": expected key=value");
      m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return m;
  }

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    throw ParseError("manifest is missing key '" + key + "'");
  }

  double get_double(const std::string& key) const {
    double v = 0.0;
    if (!parse_double(get(key), v)) throw ParseError("manifest key '" + key + "' is not a number");
    return v;
  }

  long long get_int(const std::string& key) const {
    long long v = 0;
    if (!parse_int(get(key), v)) throw ParseError("manifest key '" + key + "' is not an integer");
    return v;
  }

  bool get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError("manifest key '" + key + "' is not a boolean");
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start < s.size()) {
    auto end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    long long v = 0;
    if (!parse_int(std::string_view(s).substr(start, end - start), v))
      throw ParseError("bad integer list '" + s + "'");
    out.push_back(static_cast<int>(v));
    start = end + 1;
  }
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

void echo_train_config(Manifest& m, const TrainConfig& c) {
  m.set("config.epochs", std::to_string(c.epochs));
  m.set("config.pretrain_epochs", std::to_string(c.pretrain_epochs));
  m.set("config.ids_per_batch", std::to_string(c.ids_per_batch));
  m.set("config.instances_per_id", std::to_string(c.instances_per_id));
  m.set("config.lr", format_double(c.lr));
  m.set("config.lr_decay_epochs", join_ints(c.lr_decay_epochs));
  m.set("config.lr_decay_factor", format_double(c.lr_decay_factor));
  m.set("config.ablation", std::string(to_string(c.ablation)));
  m.set("config.tau", format_double(c.hp.tau));
  m.set("config.alpha", format_double(c.hp.alpha));
  m.set("config.beta", format_double(c.hp.beta));
  m.set("config.mu", format_double(c.hp.mu));
  m.set("config.eps", format_double(c.dbscan.eps));
  m.set("config.min_pts", std::to_string(c.dbscan.min_pts));
  m.set("config.intermediate_sigma", format_double(c.intermediate_sigma));
  m.set("config.assign_policy",
        c.assign_policy == AssignPolicy::ArgminPerRow ? "argmin" : "rounds");
  m.set("config.rebuild_banks", bool_text(c.rebuild_banks));
  m.set("config.intermediate_updates_agnostic_r", bool_text(c.intermediate_updates_agnostic_r));
  m.set("config.seed", std::to_string(c.seed));
}

TrainConfig train_config_from(const Manifest& m) {
  TrainConfig c;
  c.epochs = static_cast<int>(m.get_int("config.epochs"));
  c.pretrain_epochs = static_cast<int>(m.get_int("config.pretrain_epochs"));
  c.ids_per_batch = static_cast<int>(m.get_int("config.ids_per_batch"));
  c.instances_per_id = static_cast<int>(m.get_int("config.instances_per_id"));
  c.lr = m.get_double("config.lr");
  c.lr_decay_epochs = split_ints(m.get("config.lr_decay_epochs"));
  c.lr_decay_factor = m.get_double("config.lr_decay_factor");
  const auto ablation = parse_ablation(m.get("config.ablation"));
  if (!ablation) throw ParseError("manifest has unknown ablation '" + m.get("config.ablation") + "'");
  c.ablation = *ablation;
  c.hp.tau = m.get_double("config.tau");
  c.hp.alpha = m.get_double("config.alpha");
  c.hp.beta = m.get_double("config.beta");
  c.hp.mu = m.get_double("config.mu");
  c.dbscan.eps = m.get_double("config.eps");
  c.dbscan.min_pts = static_cast<int>(m.get_int("config.min_pts"));
  c.intermediate_sigma = m.get_double("config.intermediate_sigma");
  const auto& policy = m.get("config.assign_policy");
  if (policy != "rounds" && policy != "argmin")
    throw ParseError("manifest has unknown assign_policy '" + policy + "'");
  c.assign_policy = policy == "argmin" ? AssignPolicy::ArgminPerRow : AssignPolicy::InjectiveRounds;
  c.rebuild_banks = m.get_bool("config.rebuild_banks");
  c.intermediate_updates_agnostic_r = m.get_bool("config.intermediate_updates_agnostic_r");
  c.seed = static_cast<std::uint64_t>(m.get_int("config.seed"));
  return c;
}

void echo_synth_config(Manifest& m, const SynthConfig& c) {
  m.set("config.n_ids", std::to_string(c.n_ids));
  m.set("config.per_id_per_modality", std::to_string(c.per_id_per_modality));
  m.set("config.dim", std::to_string(c.dim));
  m.set("config.intra_sigma", format_double(c.intra_sigma));
  m.set("config.modality_shift", format_double(c.modality_shift));
  m.set("config.split_prob", format_double(c.split_prob));
  m.set("config.infrared_split_prob", format_double(c.infrared_split_prob));
  m.set("config.split_offset", format_double(c.split_offset));
  m.set("config.anchor_spread", c.anchor_spread ? format_double(*c.anchor_spread) : "uniform");
  m.set("config.seed", std::to_string(c.seed));
}

// ---- option plumbing -----------------------------------------------------

bool given(CLI::App* app, const std::string& name) { return app->count(name) > 0; }

// Every long flag gets an XMM_ environment override, e.g. --min-pts reads
// XMM_MIN_PTS when absent from the command line.
void attach_env_names(CLI::App* app) {
  for (CLI::Option* opt : app->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "version") continue;
    std::string env = "XMM_";
    for (char ch : names.front())
      env += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    opt->envname(env);
  }
  for (CLI::App* sub : app->get_subcommands({})) attach_env_names(sub);
}

void require(CLI::App* app, std::initializer_list<const char*> names) {
  for (const char* name : names)
    if (!given(app, name)) throw UsageError(std::string(name) + " is required");
}

// ---- subcommands ---------------------------------------------------------

struct GenerateArgs {
  std::string out = "data";
  SynthConfig synth;
  double anchor_spread = 0.0;
  bool benchmark = false;
};

void add_generate(CLI::App& app, GenerateArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("generate", "write a synthetic visible/infrared embedding pair");
  sub->add_option("--out", a.out, "output directory")->capture_default_str();
  sub->add_option("--n-ids", a.synth.n_ids, "identities")->capture_default_str();
  sub->add_option("--per-id", a.synth.per_id_per_modality, "samples per identity and modality")
      ->capture_default_str();
  sub->add_option("--dim", a.synth.dim, "embedding dimension")->capture_default_str();
  sub->add_option("--intra-sigma", a.synth.intra_sigma, "within-identity noise norm")
      ->capture_default_str();
  sub->add_option("--modality-shift", a.synth.modality_shift, "infrared offset norm")
      ->capture_default_str();
  sub->add_option("--split-prob", a.synth.split_prob, "chance an identity splits in visible")
      ->capture_default_str();
  sub->add_option("--infrared-split-prob", a.synth.infrared_split_prob,
                  "chance an identity splits in infrared")
      ->capture_default_str();
  sub->add_option("--split-offset", a.synth.split_offset, "distance between sub-cluster anchors")
      ->capture_default_str();
  sub->add_option("--anchor-spread", a.anchor_spread,
                  "pack anchors around a common centre (default: uniform on the sphere)");
  sub->add_option("--seed", a.synth.seed, "random seed")->capture_default_str();
  sub->add_flag("--benchmark", a.benchmark, "start from the reference benchmark recipe");

  action = [&a, sub] {
    SynthConfig cfg = a.benchmark ? reference_benchmark().synth : SynthConfig{};
    if (given(sub, "--n-ids")) cfg.n_ids = a.synth.n_ids;
    if (given(sub, "--per-id")) cfg.per_id_per_modality = a.synth.per_id_per_modality;
    if (given(sub, "--dim")) cfg.dim = a.synth.dim;
    if (given(sub, "--intra-sigma")) cfg.intra_sigma = a.synth.intra_sigma;
    if (given(sub, "--modality-shift")) cfg.modality_shift = a.synth.modality_shift;
    if (given(sub, "--split-prob")) cfg.split_prob = a.synth.split_prob;
    if (given(sub, "--infrared-split-prob")) cfg.infrared_split_prob = a.synth.infrared_split_prob;
    if (given(sub, "--split-offset")) cfg.split_offset = a.synth.split_offset;
    if (given(sub, "--anchor-spread")) cfg.anchor_spread = a.anchor_spread;
    if (given(sub, "--seed")) cfg.seed = a.synth.seed;

    const auto data = generate(cfg);
    const fs::path dir(a.out);
    ensure_dir(dir);
    save_embeddings(dir / "visible.emb", data.visible);
    save_embeddings(dir / "infrared.emb", data.infrared);

    Manifest m;
    m.set("version", kVersion);
    m.set("command", "generate");
    echo_synth_config(m, cfg);
    m.set("artifact.visible", "visible.emb");
    m.set("artifact.infrared", "infrared.emb");
    write_file(dir / "manifest.txt", m.to_text());
    std::cout << "wrote " << (dir / "visible.emb").string() << " and "
              << (dir / "infrared.emb").string() << "\n";
  };
}

struct ClusterArgs {
  std::string input;
  std::string modality = "v";
  DbscanParams dbscan;
  std::string out = "labels.txt";
};

// Pseudo-label file: "#clusters K" then one label per input row (-1 = noise).
std::string format_labels(const PseudoLabels& labels) {
  std::string out = "#clusters " + std::to_string(labels.cluster_count) + "\n";
  for (int l : labels.labels) out += std::to_string(l) + "\n";
  return out;
}

void add_dbscan_flags(CLI::App* sub, DbscanParams& p) {
  sub->add_option("--eps", p.eps, "DBSCAN neighbourhood radius")->capture_default_str();
  sub->add_option("--min-pts", p.min_pts, "DBSCAN core-point threshold")->capture_default_str();
}

void add_cluster(CLI::App& app, ClusterArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("cluster", "DBSCAN pseudo-labels for one embedding file");
  sub->add_option("--input", a.input, "embedding file");
  sub->add_option("--modality", a.modality, "record tag of the file (v|r)")
      ->check(CLI::IsMember({"v", "r"}))
      ->capture_default_str();
  add_dbscan_flags(sub, a.dbscan);
  sub->add_option("--out", a.out, "pseudo-label file")->capture_default_str();

  action = [&a, sub] {
    require(sub, {"--input"});
    const auto set = load_embeddings(a.input, parse_modality_tag(a.modality));
    const auto labels = dbscan(set, a.dbscan);
    write_file(a.out, format_labels(labels));
    std::cout << "clusters=" << labels.cluster_count << "\n";
  };
}

struct MatchArgs {
  std::string visible, infrared;
  DbscanParams dbscan;
  std::string mode = "mbccm";
  bool argmin = false;
  std::string out = "pairs.txt";
  std::string quality_out = "match_quality.txt";
};

std::string format_quality(const MatchQuality& mq) {
  std::ostringstream s;
  s << "pair_precision=" << format_double(mq.pair_precision) << "\n"
    << "pair_recall=" << format_double(mq.pair_recall) << "\n"
    << "coverage=" << format_double(mq.coverage) << "\n"
    << "pairs=" << mq.pairs << "\n"
    << "correct_pairs=" << mq.correct_pairs << "\n";
  return s.str();
}

void add_match(CLI::App& app, MatchArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("match", "cluster both modalities and match their clusters");
  sub->add_option("--visible", a.visible, "visible embedding file");
  sub->add_option("--infrared", a.infrared, "infrared embedding file");
  add_dbscan_flags(sub, a.dbscan);
  sub->add_option("--mode", a.mode, "mbccm (many-to-many) or bccm (one-to-one)")
      ->check(CLI::IsMember({"mbccm", "bccm"}))
      ->capture_default_str();
  sub->add_flag("--argmin", a.argmin, "debug: nearest-gallery assignment instead of K-M rounds");
  sub->add_option("--out", a.out, "pair list, one 'v_cluster r_cluster' per line")
      ->capture_default_str();
  sub->add_option("--quality-out", a.quality_out, "match quality report (when ids exist)")
      ->capture_default_str();

  action = [&a, sub] {
    require(sub, {"--visible", "--infrared"});
    const auto v = load_embeddings(a.visible, Modality::Visible);
    const auto r = load_embeddings(a.infrared, Modality::Infrared);
    const auto lv = dbscan(v, a.dbscan);
    const auto lr = dbscan(r, a.dbscan);
    const auto policy = a.argmin ? AssignPolicy::ArgminPerRow : AssignPolicy::InjectiveRounds;
    const auto cost = cost_matrix(centroids(v, lv), centroids(r, lr));
    const auto match = a.mode == "bccm" ? bccm(cost, policy) : mbccm(cost, policy);

    std::string pairs;
    for (const auto& [i, j] : match.pairs()) pairs += std::to_string(i) + " " + std::to_string(j) + "\n";
    write_file(a.out, pairs);
    std::cout << "K_v=" << lv.cluster_count << " K_r=" << lr.cluster_count
              << " pairs=" << match.pairs().size() << "\n";
    if (v.has_ids() && r.has_ids()) {
      const auto report = format_quality(match_quality(match, lv, lr, v.ids, r.ids));
      write_file(a.quality_out, report);
      std::cout << report;
    }
  };
}

struct TrainArgs {
  std::string visible, infrared;
  std::string out = "run";
  std::string from_manifest;
  TrainConfig cfg;
  std::string ablation = "full";
  bool argmin = false;
  bool carry_banks = false;
  bool exclude_intermediate = false;
  bool desk = false;
  bool benchmark = false;
};

// Flags that shape the run; none may be combined with --from-manifest.
const std::vector<std::string> kTrainConfigFlags = {
    "--visible",      "--infrared",         "--epochs",   "--pretrain-epochs",
    "--ids-per-batch", "--instances-per-id", "--lr",       "--lr-decay-epochs",
    "--lr-decay-factor", "--ablation",      "--tau",      "--alpha",
    "--beta",         "--mu",               "--eps",      "--min-pts",
    "--intermediate-sigma", "--argmin",     "--carry-banks",
    "--exclude-intermediate-agnostic-r",    "--seed",     "--desk",
    "--benchmark"};

TrainConfig resolve_train_config(const TrainArgs& a, CLI::App* sub) {
  TrainConfig c = a.benchmark ? reference_benchmark().train : TrainConfig{};
  if (a.desk) {
    c.ids_per_batch = 4;
    c.instances_per_id = 4;
  }
  const TrainConfig& f = a.cfg;
  if (given(sub, "--epochs")) c.epochs = f.epochs;
  if (given(sub, "--pretrain-epochs")) c.pretrain_epochs = f.pretrain_epochs;
  if (given(sub, "--ids-per-batch")) c.ids_per_batch = f.ids_per_batch;
  if (given(sub, "--instances-per-id")) c.instances_per_id = f.instances_per_id;
  if (given(sub, "--lr")) c.lr = f.lr;
  if (given(sub, "--lr-decay-epochs")) c.lr_decay_epochs = f.lr_decay_epochs;
  if (given(sub, "--lr-decay-factor")) c.lr_decay_factor = f.lr_decay_factor;
  if (given(sub, "--ablation")) c.ablation = *parse_ablation(a.ablation);
  if (given(sub, "--tau")) c.hp.tau = f.hp.tau;
  if (given(sub, "--alpha")) c.hp.alpha = f.hp.alpha;
  if (given(sub, "--beta")) c.hp.beta = f.hp.beta;
  if (given(sub, "--mu")) c.hp.mu = f.hp.mu;
  if (given(sub, "--eps")) c.dbscan.eps = f.dbscan.eps;
  if (given(sub, "--min-pts")) c.dbscan.min_pts = f.dbscan.min_pts;
  if (given(sub, "--intermediate-sigma")) c.intermediate_sigma = f.intermediate_sigma;
  if (a.argmin) c.assign_policy = AssignPolicy::ArgminPerRow;
  if (a.carry_banks) c.rebuild_banks = false;
  if (a.exclude_intermediate) c.intermediate_updates_agnostic_r = false;
  if (given(sub, "--seed")) c.seed = f.seed;
  return c;
}

void add_train(CLI::App& app, TrainArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("train", "train embeddings; writes a run directory");
  auto& c = a.cfg;
  sub->add_option("--visible", a.visible, "visible embedding file");
  sub->add_option("--infrared", a.infrared, "infrared embedding file");
  sub->add_option("--out", a.out, "run directory")->capture_default_str();
  sub->add_option("--from-manifest", a.from_manifest, "rerun the configuration of a manifest");
  sub->add_option("--epochs", c.epochs, "total epochs")->capture_default_str();
  sub->add_option("--pretrain-epochs", c.pretrain_epochs, "epochs before matching starts")
      ->capture_default_str();
  sub->add_option("--ids-per-batch", c.ids_per_batch, "matched cluster pairs per batch")
      ->capture_default_str();
  sub->add_option("--instances-per-id", c.instances_per_id, "instances per cluster pair")
      ->capture_default_str();
  sub->add_option("--lr", c.lr, "learning rate")->capture_default_str();
  sub->add_option("--lr-decay-epochs", c.lr_decay_epochs, "comma-separated decay epochs")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--lr-decay-factor", c.lr_decay_factor, "divisor applied at each decay epoch")
      ->capture_default_str();
  sub->add_option("--ablation", a.ablation, "baseline | bccm_msma | mbccm_msma | full")
      ->check(CLI::IsMember({"baseline", "bccm_msma", "mbccm_msma", "full"}))
      ->capture_default_str();
  sub->add_option("--tau", c.hp.tau, "softmax temperature")->capture_default_str();
  sub->add_option("--alpha", c.hp.alpha, "agnostic-loss weight")->capture_default_str();
  sub->add_option("--beta", c.hp.beta, "consistency-loss weight")->capture_default_str();
  sub->add_option("--mu", c.hp.mu, "memory momentum")->capture_default_str();
  add_dbscan_flags(sub, c.dbscan);
  sub->add_option("--intermediate-sigma", c.intermediate_sigma,
                  "noise norm of the intermediate twin")
      ->capture_default_str();
  sub->add_flag("--argmin", a.argmin, "debug: nearest-gallery assignment instead of K-M rounds");
  sub->add_flag("--carry-banks", a.carry_banks,
                "keep memory banks across epochs while cluster counts are unchanged");
  sub->add_flag("--exclude-intermediate-agnostic-r", a.exclude_intermediate,
                "intermediate instances do not update the infrared agnostic bank");
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_flag("--desk", a.desk, "4x4 batches for desk-scale runs");
  sub->add_flag("--benchmark", a.benchmark, "start from the reference benchmark configuration");

  action = [&a, sub] {
    TrainConfig cfg;
    std::string visible_path, infrared_path;
    if (given(sub, "--from-manifest")) {
      for (const auto& flag : kTrainConfigFlags)
        if (given(sub, flag)) throw UsageError(flag + " cannot be combined with --from-manifest");
      const auto m = Manifest::parse(read_file(a.from_manifest));
      if (m.get("command") != "train")
        throw ParseError(a.from_manifest + " is not a train manifest");
      cfg = train_config_from(m);
      visible_path = m.get("input.visible");
      infrared_path = m.get("input.infrared");
      for (const auto& [key, path] : {std::pair{"input.visible", visible_path},
                                      std::pair{"input.infrared", infrared_path}}) {
        if (sha256_hex(read_file(path)) != m.get(std::string(key) + ".sha256"))
          throw IoError(path + " no longer matches the manifest digest");
      }
    } else {
      require(sub, {"--visible", "--infrared"});
      cfg = resolve_train_config(a, sub);
      visible_path = fs::absolute(a.visible).lexically_normal().string();
      infrared_path = fs::absolute(a.infrared).lexically_normal().string();
    }
    try {
      cfg.validate();
    } catch (const InvalidConfig& e) {
      throw UsageError(e.what());
    }

    const std::string v_bytes = read_file(visible_path);
    const std::string r_bytes = read_file(infrared_path);
    const auto v = parse_embeddings(v_bytes, Modality::Visible);
    const auto r = parse_embeddings(r_bytes, Modality::Infrared);
    const auto result = run(v, r, cfg);

    const fs::path dir(a.out);
    ensure_dir(dir);
    write_file(dir / "metrics.log", format_metrics_log(result.steps));
    write_file(dir / "epochs.txt", format_epoch_summaries(result.epochs));
    save_embeddings(dir / "visible.emb", result.visible);
    save_embeddings(dir / "infrared.emb", result.infrared);

    Manifest m;
    m.set("version", kVersion);
    m.set("command", "train");
    echo_train_config(m, cfg);
    m.set("input.visible", visible_path);
    m.set("input.visible.sha256", sha256_hex(v_bytes));
    m.set("input.infrared", infrared_path);
    m.set("input.infrared.sha256", sha256_hex(r_bytes));
    m.set("artifact.metrics", "metrics.log");
    m.set("artifact.epochs", "epochs.txt");
    m.set("artifact.visible", "visible.emb");
    m.set("artifact.infrared", "infrared.emb");
    write_file(dir / "manifest.txt", m.to_text());

    const auto& last = result.epochs.back();
    std::cout << "epochs=" << result.epochs.size() << " K_v=" << last.k_v << " K_r=" << last.k_r;
    if (last.map) std::cout << " mAP=" << format_double(*last.map);
    std::cout << "\nrun directory: " << dir.string() << "\n";
  };
}

struct EvalArgs {
  std::string visible, infrared;
  std::string query = "r";
  std::string out = "report.txt";
};

void add_eval(CLI::App& app, EvalArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("eval", "cross-modality retrieval metrics");
  sub->add_option("--visible", a.visible, "visible embedding file");
  sub->add_option("--infrared", a.infrared, "infrared embedding file");
  sub->add_option("--query", a.query, "query modality (v|r); the other side is the gallery")
      ->check(CLI::IsMember({"v", "r"}))
      ->capture_default_str();
  sub->add_option("--out", a.out, "report file")->capture_default_str();

  action = [&a, sub] {
    require(sub, {"--visible", "--infrared"});
    const auto v = load_embeddings(a.visible, Modality::Visible);
    const auto r = load_embeddings(a.infrared, Modality::Infrared);
    const auto report = a.query == "r" ? retrieve_and_score(r, v) : retrieve_and_score(v, r);
    write_file(a.out, report.to_text());
    std::cout << report.to_text();
  };
}

struct HistArgs {
  std::string visible, infrared;
  std::size_t pairs = 10000;
  std::size_t bins = 20;
  std::uint64_t seed = 0;
  std::string out = "hist.txt";
};

void add_hist(CLI::App& app, HistArgs& a, std::function<void()>& action) {
  auto* sub = app.add_subcommand("hist", "histogram of same-identity cross-modality distances");
  sub->add_option("--visible", a.visible, "visible embedding file");
  sub->add_option("--infrared", a.infrared, "infrared embedding file");
  sub->add_option("--pairs", a.pairs, "sampled positive pairs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--bins", a.bins, "bins over [0, 2]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--seed", a.seed, "sampling seed")->capture_default_str();
  sub->add_option("--out", a.out, "histogram file")->capture_default_str();

  action = [&a, sub] {
    require(sub, {"--visible", "--infrared"});
    const auto v = load_embeddings(a.visible, Modality::Visible);
    const auto r = load_embeddings(a.infrared, Modality::Infrared);
    const auto h = positive_distance_histogram(v, r, a.pairs, a.bins, a.seed);
    write_file(a.out, h.to_text());
    std::cout << "mode bin=" << h.mode() << " left edge=" << format_double(h.edges[h.mode()])
              << "\n";
  };
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Cross-modality cluster matching toolkit", "xmm"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker thread cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenerateArgs gen;
  ClusterArgs clu;
  MatchArgs mat;
  TrainArgs tra;
  EvalArgs eva;
  HistArgs his;
  std::function<void()> gen_fn, clu_fn, mat_fn, tra_fn, eva_fn, his_fn;
  add_generate(app, gen, gen_fn);
  add_cluster(app, clu, clu_fn);
  add_match(app, mat, mat_fn);
  add_train(app, tra, tra_fn);
  add_eval(app, eva, eva_fn);
  add_hist(app, his, his_fn);
  attach_env_names(&app);

  auto usage_text = [&app] {
    const auto subs = app.get_subcommands();
    return subs.empty() ? app.help() : subs.front()->help();
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << usage_text();
    return 1;
  }

  set_thread_count(threads);
  const std::map<std::string, std::function<void()>*> actions = {
      {"generate", &gen_fn}, {"cluster", &clu_fn}, {"match", &mat_fn},
      {"train", &tra_fn},    {"eval", &eva_fn},    {"hist", &his_fn}};
  try {
    (*actions.at(app.get_subcommands().front()->get_name()))();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << usage_text();
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace xmm::cli
