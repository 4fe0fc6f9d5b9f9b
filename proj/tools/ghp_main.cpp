// Command-line front end: simulate / learn / distance / eval subcommands over
// the graphon Hawkes library. Progress goes to stderr, data to files; every
// output gets a manifest sidecar and all randomness flows from --seed.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "ghp/io.hpp"

namespace {

using nlohmann::json;

int resolve_threads(int flag_value) {
  // GHP_THREADS takes precedence over the flag; default is all cores.
  if (const char* env = std::getenv("GHP_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
      throw ghp::ConfigError("GHP_THREADS must be an integer");
    }
  }
  if (flag_value > 0) return flag_value;
  return ghp::default_thread_count();
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void emit_json(const std::string& out_path, const json& payload) {
  if (out_path.empty()) {
    std::cout << payload.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ghp::IoError("cannot write output: " + out_path);
  out << payload.dump(2) << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"graphon Hawkes processes: simulation, learning, transport distances, evaluation"};
  app.require_subcommand(1);
  bool quiet = false;
  int threads_flag = 0;
  app.add_flag("--quiet", quiet, "suppress progress output");
  app.add_option("--threads", threads_flag, "worker thread cap (default: all cores)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample Hawkes processes and simulate sequences");
  std::string sim_model, sim_out;
  int sim_count = 1;
  double sim_horizon = 50.0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--model", sim_model, "model json")->required();
  sim->add_option("--count", sim_count, "number of sequences")->required();
  sim->add_option("--horizon", sim_horizon, "observation window length");
  sim->add_option("--seed", sim_seed, "root seed");
  sim->add_option("--out", sim_out, "output jsonl")->required();

  // learn
  auto* learn = app.add_subcommand("learn", "fit a graphon model to a sequence corpus");
  std::string l_train, l_vmax = "auto", l_method = "hot", l_ref, l_out, l_report, l_beta = "auto";
  int l_epochs = 20, l_batch = 10, l_order = 5, l_grid = 100;
  double l_lr = 0.01, l_tau = 1.0, l_horizon = -1.0, l_kernel = 1.0;
  std::uint64_t l_seed = 0;
  learn->add_option("--train", l_train, "training jsonl")->required();
  learn->add_option("--epochs", l_epochs, "epochs");
  learn->add_option("--lr", l_lr, "learning rate");
  learn->add_option("--batch", l_batch, "batch size");
  learn->add_option("--vmax", l_vmax, "max event types (integer or 'auto')");
  learn->add_option("--method", l_method, "hot | raml");
  learn->add_option("--tau", l_tau, "exponential payoff temperature (raml)");
  learn->add_option("--beta", l_beta, "sinkhorn regularization (number or 'auto')");
  learn->add_option("--horizon", l_horizon, "generation window (default: corpus max)");
  learn->add_option("--fourier-order", l_order, "Fourier order S of the learned graphon");
  learn->add_option("--kernel-rate", l_kernel, "decay rate of the exponential kernel");
  learn->add_option("--grid", l_grid, "grid for per-epoch distance to --ref-model");
  learn->add_option("--seed", l_seed, "root seed");
  learn->add_option("--ref-model", l_ref, "reference model json for per-epoch distance");
  learn->add_option("--out", l_out, "output model json")->required();
  learn->add_option("--report", l_report, "per-epoch csv report");

  // distance
  auto* dist = app.add_subcommand("distance", "hierarchical OT distance between two sequence sets");
  std::string d_a, d_b, d_out;
  bool d_plans = false;
  double d_beta = -1.0;
  dist->add_option("--a", d_a, "first jsonl")->required();
  dist->add_option("--b", d_b, "second jsonl")->required();
  dist->add_option("--beta", d_beta, "sinkhorn regularization (default: auto)");
  dist->add_flag("--plans", d_plans, "include per-pair transport plans");
  dist->add_option("--out", d_out, "output json (stdout if omitted)");

  // eval
  auto* eval = app.add_subcommand("eval", "model evaluation utilities");
  eval->require_subcommand(1);

  auto* efgw = eval->add_subcommand("fgw", "fused GW distance between two models");
  std::string ef_a, ef_b, ef_out;
  int ef_grid = 100, ef_iters = 2000;
  efgw->add_option("--model-a", ef_a)->required();
  efgw->add_option("--model-b", ef_b)->required();
  efgw->add_option("--grid", ef_grid, "discretization grid");
  efgw->add_option("--iters", ef_iters, "proximal iterations");
  efgw->add_option("--out", ef_out, "output json (stdout if omitted)");

  auto* edot = eval->add_subcommand("dot", "set-level OT distance of model samples to a test set");
  std::string ed_model, ed_test, ed_out;
  int ed_ngen = 10;
  double ed_horizon = 50.0, ed_beta = -1.0;
  std::uint64_t ed_seed = 0;
  edot->add_option("--model", ed_model)->required();
  edot->add_option("--test", ed_test)->required();
  edot->add_option("--ngen", ed_ngen, "generated sequences");
  edot->add_option("--horizon", ed_horizon, "generation window");
  edot->add_option("--beta", ed_beta, "sinkhorn regularization (default: auto)");
  edot->add_option("--seed", ed_seed, "root seed");
  edot->add_option("--out", ed_out, "output json (stdout if omitted)");

  auto* ealign = eval->add_subcommand("align", "latent-type alignment by kernel density estimation");
  std::string ea_model, ea_test, ea_out;
  double ea_bw = 0.1, ea_horizon = 50.0, ea_beta = -1.0;
  int ea_grid = 1000, ea_ngen = 10;
  bool ea_all_pairs = false;
  std::uint64_t ea_seed = 0;
  ealign->add_option("--model", ea_model)->required();
  ealign->add_option("--test", ea_test)->required();
  ealign->add_option("--bandwidth", ea_bw, "Gaussian kernel bandwidth");
  ealign->add_option("--grid", ea_grid, "density grid points");
  ealign->add_option("--ngen", ea_ngen, "generated sequences");
  ealign->add_option("--horizon", ea_horizon, "generation window");
  ealign->add_option("--beta", ea_beta, "sinkhorn regularization (default: auto)");
  ealign->add_flag("--all-pairs", ea_all_pairs, "sum landmark weights over all real sequences");
  ealign->add_option("--seed", ea_seed, "root seed");
  ealign->add_option("--out", ea_out, "output json")->required();

  auto* everify = eval->add_subcommand("verify", "empirical verification of the model bounds");
  std::string ev_model, ev_out;
  int ev_pairs = 100, ev_lip_grid = 512;
  double ev_slack = 1e-6;
  bool ev_equal = false;
  std::uint64_t ev_seed = 0;
  everify->add_option("--model", ev_model)->required();
  everify->add_option("--pairs", ev_pairs, "sampled model pairs");
  everify->add_option("--seed", ev_seed, "root seed");
  everify->add_option("--slack", ev_slack, "relative slack");
  everify->add_option("--lip-grid", ev_lip_grid, "Lipschitz estimation grid");
  everify->add_flag("--equal-sizes", ev_equal, "force equal-size pairs");
  everify->add_option("--out", ev_out, "output json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const int threads = resolve_threads(threads_flag);

  if (*sim) {
    Timer timer;
    if (sim_count < 1) throw ghp::ConfigError("simulate: count must be >= 1");
    const ghp::GraphonParams params = ghp::io::read_model(sim_model);
    std::vector<ghp::EventSequence> seqs(static_cast<std::size_t>(sim_count));
    ghp::parallel_for(seqs.size(), threads, [&](std::size_t i) {
      ghp::Rng rng(ghp::derive_seed(sim_seed, 0x51e1ull, static_cast<std::uint64_t>(i)));
      ghp::HawkesModel m = ghp::sample_hp(params, rng);
      seqs[i] = ghp::simulate_ogata(m, sim_horizon, rng);
    });
    ghp::io::write_sequences_jsonl(sim_out, seqs);
    ghp::io::write_manifest(sim_out, "simulate",
                            json{{"model", sim_model},
                                 {"count", sim_count},
                                 {"horizon", sim_horizon},
                                 {"threads", threads}},
                            sim_seed, {sim_model}, timer.seconds());
    if (!quiet) std::cerr << "wrote " << sim_count << " sequences to " << sim_out << "\n";
  } else if (*learn) {
    Timer timer;
    const auto data = ghp::io::read_sequences_jsonl(l_train);
    ghp::LearnConfig cfg;
    cfg.epochs = l_epochs;
    cfg.batch_size = l_batch;
    cfg.learning_rate = l_lr;
    cfg.raml_tau = l_tau;
    cfg.horizon = l_horizon;
    cfg.seed = l_seed;
    cfg.fourier_order = l_order;
    cfg.kernel_rate = l_kernel;
    cfg.fgw_grid = l_grid;
    cfg.threads = threads;
    cfg.quiet = quiet;
    try {
      if (l_vmax != "auto") cfg.v_max_hat = std::stoi(l_vmax);
      if (l_beta != "auto") cfg.sinkhorn_beta = std::stod(l_beta);
    } catch (const std::exception&) {
      throw ghp::ConfigError("learn: --vmax and --beta take a number or 'auto'");
    }
    if (l_method == "hot")
      cfg.method = ghp::LearnMethod::hot;
    else if (l_method == "raml")
      cfg.method = ghp::LearnMethod::raml;
    else
      throw ghp::ConfigError("learn: --method must be 'hot' or 'raml'");
    std::optional<ghp::GraphonParams> ref;
    if (!l_ref.empty()) ref = ghp::io::read_model(l_ref);
    const ghp::LearnReport rep = ghp::train(data, cfg, ref ? &*ref : nullptr);
    ghp::io::write_model(l_out, rep.final_params);
    if (!l_report.empty()) ghp::io::write_report_csv(l_report, rep);
    std::vector<std::string> inputs{l_train};
    if (!l_ref.empty()) inputs.push_back(l_ref);
    ghp::io::write_manifest(l_out, "learn",
                            json{{"train", l_train},
                                 {"epochs", l_epochs},
                                 {"lr", l_lr},
                                 {"batch", l_batch},
                                 {"vmax", l_vmax},
                                 {"method", l_method},
                                 {"tau", l_tau},
                                 {"beta", l_beta},
                                 {"horizon", l_horizon},
                                 {"fourier_order", l_order},
                                 {"kernel_rate", l_kernel},
                                 {"grid", l_grid},
                                 {"ref_model", l_ref},
                                 {"report", l_report},
                                 {"threads", threads}},
                            l_seed, inputs, timer.seconds());
    if (!quiet) std::cerr << "wrote model to " << l_out << "\n";
  } else if (*dist) {
    Timer timer;
    const auto set_a = ghp::io::read_sequences_jsonl(d_a);
    const auto set_b = ghp::io::read_sequences_jsonl(d_b);
    const ghp::HotResult hot = ghp::hot_distance(set_a, set_b, d_beta, threads);
    json payload;
    payload["d_ot"] = hot.distance;
    payload["Q"] = ghp::io::matrix_to_json(hot.outer.matrix);
    payload["inner_D"] = ghp::io::matrix_to_json(hot.inner_cost);
    if (d_plans) {
      json plans = json::array();
      for (const auto& row : hot.inner_plans) {
        json r = json::array();
        for (const auto& plan : row) r.push_back(ghp::io::matrix_to_json(plan.matrix));
        plans.push_back(std::move(r));
      }
      payload["plans"] = std::move(plans);
    }
    emit_json(d_out, payload);
    if (!d_out.empty())
      ghp::io::write_manifest(d_out, "distance",
                              json{{"a", d_a}, {"b", d_b}, {"beta", d_beta}, {"plans", d_plans}},
                              0, {d_a, d_b}, timer.seconds());
  } else if (*efgw) {
    Timer timer;
    const auto ma = ghp::io::read_model(ef_a);
    const auto mb = ghp::io::read_model(ef_b);
    const double d = ghp::model_fgw(ma, mb, ef_grid, ef_iters);
    emit_json(ef_out, json{{"d_fgw", d}, {"grid", ef_grid}});
    if (!ef_out.empty())
      ghp::io::write_manifest(ef_out, "eval fgw",
                              json{{"model_a", ef_a}, {"model_b", ef_b}, {"grid", ef_grid}}, 0,
                              {ef_a, ef_b}, timer.seconds());
  } else if (*edot) {
    Timer timer;
    const auto params = ghp::io::read_model(ed_model);
    const auto test = ghp::io::read_sequences_jsonl(ed_test);
    ghp::Rng rng(ghp::derive_seed(ed_seed, 0xd07ull));
    const double d = ghp::set_ot_metric(params, test, ed_ngen, ed_horizon, rng, ed_beta, threads);
    emit_json(ed_out, json{{"d_ot", d}, {"n_gen", ed_ngen}, {"horizon", ed_horizon}});
    if (!ed_out.empty())
      ghp::io::write_manifest(ed_out, "eval dot",
                              json{{"model", ed_model},
                                   {"test", ed_test},
                                   {"ngen", ed_ngen},
                                   {"horizon", ed_horizon},
                                   {"beta", ed_beta}},
                              ed_seed, {ed_model, ed_test}, timer.seconds());
  } else if (*ealign) {
    Timer timer;
    const auto params = ghp::io::read_model(ea_model);
    const auto test = ghp::io::read_sequences_jsonl(ea_test);
    ghp::Rng rng(ghp::derive_seed(ea_seed, 0xa119ull));
    std::vector<ghp::EventSequence> gen(static_cast<std::size_t>(ea_ngen));
    std::vector<Eigen::VectorXd> latents(static_cast<std::size_t>(ea_ngen));
    for (int i = 0; i < ea_ngen; ++i) {
      ghp::HawkesModel m = ghp::sample_hp(params, rng);
      latents[static_cast<std::size_t>(i)] = *m.latent_x;
      gen[static_cast<std::size_t>(i)] = ghp::simulate_ogata(m, ea_horizon, rng);
    }
    const ghp::HotResult hot = ghp::hot_distance(gen, test, ea_beta, threads);
    ghp::AlignmentOptions opt;
    opt.bandwidth = ea_bw;
    opt.grid_n = ea_grid;
    opt.all_pairs = ea_all_pairs;
    const auto alignments = ghp::align_types(hot, latents, opt);
    json payload = ghp::io::alignment_to_json(alignments);
    payload["d_ot"] = hot.distance;
    payload["bandwidth"] = ea_bw;
    emit_json(ea_out, payload);
    ghp::io::write_manifest(ea_out, "eval align",
                            json{{"model", ea_model},
                                 {"test", ea_test},
                                 {"bandwidth", ea_bw},
                                 {"grid", ea_grid},
                                 {"ngen", ea_ngen},
                                 {"horizon", ea_horizon},
                                 {"all_pairs", ea_all_pairs}},
                            ea_seed, {ea_model, ea_test}, timer.seconds());
  } else if (*everify) {
    Timer timer;
    const auto params = ghp::io::read_model(ev_model);
    ghp::Rng rng(ghp::derive_seed(ev_seed, 0x7e81ull));
    ghp::VerifyOptions opt;
    opt.slack_rel = ev_slack;
    opt.lip_grid = ev_lip_grid;
    opt.equal_sizes = ev_equal;
    const ghp::PropertyReport rep = ghp::verify_properties(params, ev_pairs, rng, opt);
    emit_json(ev_out, ghp::io::verify_report_to_json(rep));
    ghp::io::write_manifest(ev_out, "eval verify",
                            json{{"model", ev_model},
                                 {"pairs", ev_pairs},
                                 {"slack", ev_slack},
                                 {"lip_grid", ev_lip_grid},
                                 {"equal_sizes", ev_equal}},
                            ev_seed, {ev_model}, timer.seconds());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ghp::IoError& e) {
    std::cerr << json{{"error", {{"kind", "io"}, {"message", e.what()}}}}.dump() << "\n";
    return 3;
  } catch (const ghp::SchemaError& e) {
    std::cerr << json{{"error", {{"kind", "schema"}, {"message", e.what()}}}}.dump() << "\n";
    return 4;
  } catch (const ghp::DegeneracyError& e) {
    std::cerr << json{{"error", {{"kind", "degeneracy"}, {"message", e.what()}}}}.dump() << "\n";
    return 5;
  } catch (const ghp::StationarityError& e) {
    std::cerr << json{{"error", {{"kind", "degeneracy"}, {"message", e.what()}}}}.dump() << "\n";
    return 5;
  } catch (const ghp::ConfigError& e) {
    std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
}
