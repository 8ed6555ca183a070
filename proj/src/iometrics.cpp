#include "madngs/iometrics.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "madngs/errors.hpp"

namespace madngs {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpointMagic = "MADNGS-CHECKPOINT";
constexpr const char* kTrajectoryMagic = "MADNGS-TRAJECTORY";

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

// Header: "key value..." lines terminated by "end"; payload follows directly.
struct Header {
  std::map<std::string, std::vector<std::string>> fields;
  std::size_t payload_offset = 0;

  const std::vector<std::string>& get(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end() || it->second.empty())
      throw CorruptHeader("header is missing field '" + key + "'");
    return it->second;
  }
  std::uint64_t number(const std::string& key, std::size_t i = 0) const {
    const auto& v = get(key);
    if (i >= v.size()) throw CorruptHeader("header field '" + key + "' is too short");
    std::uint64_t out = 0;
    const auto& s = v[i];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw CorruptHeader("header field '" + key + "' is not an integer");
    return out;
  }
};

Header parse_header(const std::string& bytes, const std::string& magic, int version,
                    const fs::path& path) {
  Header h;
  std::size_t pos = 0;
  bool first = true;
  while (true) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos || nl - pos > 4096)
      throw CorruptHeader(path.string() + ": unterminated header");
    const std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    if (first) {
      if (line != magic) throw CorruptHeader(path.string() + ": bad magic '" + line + "'");
      first = false;
      continue;
    }
    if (line == "end") break;
    std::istringstream ss(line);
    std::string key, tok;
    ss >> key;
    if (key.empty()) throw CorruptHeader(path.string() + ": empty header line");
    auto& vals = h.fields[key];
    while (ss >> tok) vals.push_back(tok);
  }
  h.payload_offset = pos;
  const auto v = h.number("version");
  if (v != static_cast<std::uint64_t>(version))
    throw VersionMismatch(path.string() + ": format version " + std::to_string(v) +
                          ", expected " + std::to_string(version));
  return h;
}

std::vector<double> read_payload(const std::string& bytes, const Header& h, std::size_t count,
                                 const fs::path& path) {
  const std::size_t need = count * 8;
  const std::size_t have = bytes.size() - h.payload_offset;
  if (have < need)
    throw TruncatedPayload(path.string() + ": payload has " + std::to_string(have) +
                           " bytes, expected " + std::to_string(need));
  if (have > need) throw CorruptHeader(path.string() + ": trailing bytes after payload");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = read_le(bytes.data() + h.payload_offset + 8 * i);
  return out;
}

std::string join_hidden(const NetworkArch& arch) {
  std::string s = std::to_string(arch.hidden_widths.size());
  for (auto w : arch.hidden_widths) s += " " + std::to_string(w);
  return s;
}

NetworkArch read_arch(const Header& h) {
  NetworkArch arch;
  arch.input_dim = h.number("input_dim");
  arch.output_dim = h.number("output_dim");
  const auto layers = h.number("hidden", 0);
  for (std::size_t i = 0; i < layers; ++i) arch.hidden_widths.push_back(h.number("hidden", i + 1));
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw CorruptHeader(std::string("invalid architecture: ") + e.what());
  }
  return arch;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_checkpoint(const Manifold& manifold, const Provenance& provenance, const fs::path& path) {
  const auto& arch = manifold.arch;
  const std::size_t n = manifold.latent_dim();
  for (const auto& z : manifold.codes)
    if (z.size() != n) throw ContractViolation("latent codes differ in length");
  if (manifold.theta.size() != arch.param_count())
    throw ContractViolation("theta does not match the architecture");
  if (provenance.config_hash.find_first_of(" \n") != std::string::npos)
    throw ContractViolation("config hash must not contain whitespace");

  std::string out = std::string(kCheckpointMagic) + "\n";
  out += "version " + std::to_string(kCheckpointVersion) + "\n";
  out += "input_dim " + std::to_string(arch.input_dim) + "\n";
  out += "hidden " + join_hidden(arch) + "\n";
  out += "output_dim " + std::to_string(arch.output_dim) + "\n";
  out += "latent_dim " + std::to_string(n) + "\n";
  out += "samples " + std::to_string(manifold.codes.size()) + "\n";
  out += "params " + std::to_string(arch.param_count()) + "\n";
  out += "seeds " + std::to_string(provenance.seeds.size());
  for (auto s : provenance.seeds) out += " " + std::to_string(s);
  out += "\nconfig_hash " + (provenance.config_hash.empty() ? "-" : provenance.config_hash) + "\n";
  out += "end\n";
  append_le(out, manifold.sigma);
  for (Eigen::Index i = 0; i < manifold.theta.values.size(); ++i) append_le(out, manifold.theta.values(i));
  for (const auto& z : manifold.codes)
    for (Eigen::Index i = 0; i < z.values.size(); ++i) append_le(out, z.values(i));
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("checkpoint not found: " + path.string());
  const std::string bytes = read_file(path);
  const Header h = parse_header(bytes, kCheckpointMagic, kCheckpointVersion, path);
  Checkpoint cp;
  auto& m = cp.manifold;
  m.arch = read_arch(h);
  const std::size_t n = h.number("latent_dim");
  const std::size_t count = h.number("samples");
  const std::size_t p = h.number("params");
  if (p != m.arch.param_count()) throw CorruptHeader("parameter count disagrees with architecture");
  const auto seeds = h.number("seeds", 0);
  for (std::size_t i = 0; i < seeds; ++i) cp.provenance.seeds.push_back(h.number("seeds", i + 1));
  cp.provenance.config_hash = h.get("config_hash")[0];
  if (cp.provenance.config_hash == "-") cp.provenance.config_hash.clear();

  const auto payload = read_payload(bytes, h, 1 + p + count * n, path);
  m.sigma = payload[0];
  m.theta.values = Eigen::Map<const Vector>(payload.data() + 1, static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < count; ++i)
    m.codes.push_back(LatentCode{Eigen::Map<const Vector>(payload.data() + 1 + p + i * n,
                                                          static_cast<Eigen::Index>(n))});
  return cp;
}

void save_trajectory(const Trajectory& traj, const fs::path& path) {
  if (traj.thetas.size() != traj.times.size())
    throw ContractViolation("trajectory times and parameters differ in length");
  const std::size_t p = traj.thetas.empty() ? 0 : traj.thetas.front().size();
  std::string out = std::string(kTrajectoryMagic) + "\n";
  out += "version " + std::to_string(kTrajectoryVersion) + "\n";
  out += "steps " + std::to_string(traj.times.size()) + "\n";
  out += "latent_dim " + std::to_string(traj.z.size()) + "\n";
  out += "params " + std::to_string(p) + "\n";
  out += "end\n";
  for (double t : traj.times) append_le(out, t);
  for (Eigen::Index i = 0; i < traj.z.values.size(); ++i) append_le(out, traj.z.values(i));
  for (const auto& th : traj.thetas) {
    if (th.size() != p) throw ContractViolation("trajectory parameter vectors differ in length");
    for (Eigen::Index i = 0; i < th.values.size(); ++i) append_le(out, th.values(i));
  }
  write_file_atomic(path, out);
}

Trajectory load_trajectory(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("trajectory not found: " + path.string());
  const std::string bytes = read_file(path);
  const Header h = parse_header(bytes, kTrajectoryMagic, kTrajectoryVersion, path);
  const std::size_t steps = h.number("steps");
  const std::size_t n = h.number("latent_dim");
  const std::size_t p = h.number("params");
  const auto payload = read_payload(bytes, h, steps + n + steps * p, path);
  Trajectory traj;
  traj.times.assign(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(steps));
  traj.z.values = Eigen::Map<const Vector>(payload.data() + steps, static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < steps; ++k)
    traj.thetas.push_back(FlatParams{Eigen::Map<const Vector>(payload.data() + steps + n + k * p,
                                                              static_cast<Eigen::Index>(p))});
  return traj;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("cannot format value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("cannot parse number '" + std::string(s) + "'");
  return v;
}

void export_grid_solution(const GridSolution& sol, const fs::path& path) {
  const bool two_d = sol.domain.dim == 2;
  std::string out = two_d ? "time,x,y,value\n" : "time,x,value\n";
  if (sol.fields.size() != sol.times.size())
    throw ContractViolation("grid solution times and fields differ in length");
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    if (sol.fields[k].size() != sol.points.size())
      throw ContractViolation("grid solution field is not on its grid");
    const std::string t = format_double(sol.times[k]);
    for (std::size_t i = 0; i < sol.points.size(); ++i) {
      out += t;
      out += ',';
      out += format_double(sol.points[i][0]);
      if (two_d) {
        out += ',';
        out += format_double(sol.points[i][1]);
      }
      out += ',';
      out += format_double(sol.fields[k][i]);
      out += '\n';
    }
  }
  try {
    write_file_atomic(path, out);
  } catch (const IoError& e) {
    throw IoError("exporting grid solution to " + path.string() + ": " + e.what());
  }
}

GridSolution import_grid_solution(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("grid solution not found: " + path.string());
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  GridSolution sol;
  if (line == "time,x,value") {
    sol.domain.dim = 1;
  } else if (line == "time,x,y,value") {
    sol.domain.dim = 2;
  } else {
    throw CorruptHeader(path.string() + ": unexpected header '" + line + "'");
  }
  const std::size_t cols = sol.domain.dim + 2;
  std::vector<std::string_view> parts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    parts.clear();
    std::string_view rest(line);
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      const auto comma = rest.find(',');
      if (comma == std::string_view::npos) throw CorruptHeader(path.string() + ": short row");
      parts.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    parts.push_back(rest);
    const double t = parse_double(parts[0]);
    Point x{parse_double(parts[1]), sol.domain.dim == 2 ? parse_double(parts[2]) : 0.0};
    const double v = parse_double(parts.back());
    if (sol.times.empty() || sol.times.back() != t) {
      sol.times.push_back(t);
      sol.fields.emplace_back();
    }
    if (sol.times.size() == 1) sol.points.push_back(x);
    sol.fields.back().push_back(v);
  }
  for (const auto& f : sol.fields)
    if (f.size() != sol.points.size()) throw CorruptHeader(path.string() + ": ragged time blocks");
  // Bounding box of the stored points; the periodic right endpoint is not recoverable.
  for (std::size_t a = 0; a < sol.domain.dim && !sol.points.empty(); ++a) {
    double lo = sol.points[0][a], hi = lo;
    for (const auto& p : sol.points) {
      lo = std::min(lo, p[a]);
      hi = std::max(hi, p[a]);
    }
    sol.domain.lower[a] = lo;
    sol.domain.upper[a] = hi;
  }
  return sol;
}

void export_report(const ExperimentReport& report, const fs::path& path) {
  nlohmann::json j;
  j["config"] = report.config;
  j["seeds"] = report.seeds;
  j["metrics"] = nlohmann::json::object();
  for (const auto& [k, v] : report.metrics) j["metrics"][k] = v;
  j["mse"] = nlohmann::json::array();
  for (const auto& e : report.mse)
    j["mse"].push_back({{"mode", e.mode}, {"sample", e.sample}, {"time", e.time}, {"value", e.value}});
  write_file_atomic(path, j.dump(2) + "\n");

  nlohmann::json timing = report.wall_times;
  fs::path sidecar = path;
  sidecar += ".timing.json";
  write_file_atomic(sidecar, timing.dump(2) + "\n");
}

ExperimentReport import_report(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("report not found: " + path.string());
  ExperimentReport r;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.metrics = j.at("metrics").get<std::map<std::string, double>>();
    for (const auto& e : j.at("mse"))
      r.mse.push_back({e.at("mode").get<std::string>(), e.at("sample").get<std::size_t>(),
                       e.at("time").get<double>(), e.at("value").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeader(path.string() + ": " + e.what());
  }
  fs::path sidecar = path;
  sidecar += ".timing.json";
  if (fs::exists(sidecar))
    r.wall_times = nlohmann::json::parse(read_file(sidecar)).get<std::map<std::string, double>>();
  return r;
}

}  // namespace madngs
