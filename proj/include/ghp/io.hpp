#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ghp/common.hpp"
#include "ghp/evaluation.hpp"
#include "ghp/event_sequence.hpp"
#include "ghp/graphon.hpp"
#include "ghp/learning.hpp"
#include "ghp/transport.hpp"

namespace ghp {

inline constexpr const char* kToolVersion = "0.1.0";

namespace io {

using nlohmann::json;

inline json params_to_json(const GraphonParams& p) {
  json j;
  j["f1"] = p.f1;
  j["f2"] = p.f2;
  j["S"] = p.fourier_order;
  j["g_coeffs"] = std::vector<double>(p.g_coeffs.data(), p.g_coeffs.data() + p.g_coeffs.size());
  j["v_max"] = p.v_max;
  j["kernel_rate"] = p.kernel_rate;
  return j;
}

inline GraphonParams params_from_json(const json& j) {
  GraphonParams p;
  try {
    p.f1 = j.at("f1").get<double>();
    p.f2 = j.at("f2").get<double>();
    p.fourier_order = j.at("S").get<int>();
    const auto coeffs = j.at("g_coeffs").get<std::vector<double>>();
    p.g_coeffs = Eigen::Map<const Eigen::VectorXd>(coeffs.data(),
                                                   static_cast<Eigen::Index>(coeffs.size()));
    p.v_max = j.at("v_max").get<int>();
    p.kernel_rate = j.at("kernel_rate").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model json: ") + e.what());
  }
  try {
    validate_params(p);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("model json: ") + e.what());
  }
  return p;
}

inline GraphonParams read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model json parse (") + path + "): " + e.what());
  }
  return params_from_json(j);
}

inline void write_model(const std::string& path, const GraphonParams& p) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file: " + path);
  out << params_to_json(p).dump(2) << "\n";
}

inline json sequence_to_json(const EventSequence& s) {
  json ev = json::array();
  for (const Event& e : s.events) ev.push_back(json::array({e.time, e.type}));
  return json{{"T", s.horizon}, {"events", std::move(ev)}, {"num_types", s.num_types}};
}

inline EventSequence sequence_from_json(const json& j) {
  EventSequence s;
  try {
    s.horizon = j.at("T").get<double>();
    s.num_types = j.at("num_types").get<int>();
    for (const auto& e : j.at("events")) {
      if (!e.is_array() || e.size() != 2) throw SchemaError("sequence json: event must be [t, v]");
      s.events.push_back({e[0].get<double>(), e[1].get<int>()});
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("sequence json: ") + e.what());
  }
  const bool sorted = std::is_sorted(s.events.begin(), s.events.end(),
                                     [](const Event& a, const Event& b) { return a.time < b.time; });
  if (!sorted) {
    std::cerr << "warning: events out of order in input; applying stable sort\n";
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
  }
  try {
    validate_sequence(s, true);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("sequence json: ") + e.what());
  }
  return s;
}

inline std::vector<EventSequence> read_sequences_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sequence file: " + path);
  std::vector<EventSequence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(sequence_from_json(j));
  }
  return out;
}

inline void write_sequences_jsonl(const std::string& path, const std::vector<EventSequence>& seqs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sequence file: " + path);
  for (const EventSequence& s : seqs) out << sequence_to_json(s).dump() << "\n";
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for digest: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// Reproducibility sidecar written next to every output file: the resolved
// configuration plus input digests pin down the run; data files themselves
// stay byte-identical under a fixed seed.
inline void write_manifest(const std::string& out_path, const std::string& subcommand,
                           const json& config, std::uint64_t seed,
                           const std::vector<std::string>& inputs, double wall_seconds) {
  json j;
  j["subcommand"] = subcommand;
  j["config"] = config;
  j["seed"] = seed;
  j["version"] = kToolVersion;
  json digests = json::object();
  for (const std::string& path : inputs) digests[path] = fnv1a_file(path);
  j["input_digests"] = std::move(digests);
  j["wall_clock_seconds"] = wall_seconds;
  j["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
  const std::string path = out_path + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

inline void write_report_csv(const std::string& path, const LearnReport& rep) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  out << "epoch,loss,mean_reward,d_fgw,seconds\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < rep.epochs.size(); ++i) {
    const EpochStats& e = rep.epochs[i];
    out << (i + 1) << "," << e.loss << "," << e.mean_reward << ",";
    if (!std::isnan(e.d_fgw)) out << e.d_fgw;
    out << "," << e.seconds << "\n";
  }
}

inline json alignment_to_json(const std::vector<TypeAlignment>& alignments) {
  json seqs = json::object();
  for (const TypeAlignment& a : alignments) {
    json t;
    t["type"] = a.type;
    t["x_star"] = a.x_star;
    t["density"] = std::vector<double>(a.density.data(), a.density.data() + a.density.size());
    t["grid"] = a.grid;
    t["aligned"] = a.aligned;
    t["landmarks"] = a.landmarks;
    seqs[std::to_string(a.sequence)].push_back(std::move(t));
  }
  return json{{"sequences", std::move(seqs)}};
}

inline json property_check_to_json(const PropertyCheck& c) {
  json j;
  j["evaluated"] = c.evaluated;
  j["violations"] = c.violations;
  j["worst_margin"] = c.worst_margin;
  return j;
}

inline json verify_report_to_json(const PropertyReport& r) {
  json j;
  j["pairs"] = r.pairs;
  j["inestimable"] = r.inestimable;
  j["lipschitz"] = {{"c1_f", r.lipschitz.c1_f},
                    {"c2_f", r.lipschitz.c2_f},
                    {"c_g", r.lipschitz.c_g},
                    {"grid_size", r.lipschitz.grid_size}};
  j["p2_f_lower"] = property_check_to_json(r.p2_f_lower);
  j["p2_f_upper"] = property_check_to_json(r.p2_f_upper);
  j["p2_g_w"] = property_check_to_json(r.p2_g_w);
  j["p2_g_gw"] = property_check_to_json(r.p2_g_gw);
  j["p3"] = property_check_to_json(r.p3);
  j["corollary1"] = property_check_to_json(r.corollary1);
  return j;
}

}  // namespace io
}  // namespace ghp
