#include "fordn/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fordn/errors.hpp"

namespace fordn::io {

namespace {

std::filesystem::path with_ext(const std::filesystem::path& base, const char* ext) {
  return std::filesystem::path(base.string() + ext);
}

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

void append_f32(std::string& buf, double value) {
  const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(value)));
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  buf.append(bytes, 4);
}

float read_f32(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  return std::bit_cast<float>(to_le(bits));
}

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_binary(const std::filesystem::path& path, const std::string& bytes) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

Dims dims_from(const Json& j) {
  const auto& d = j.at("dims");
  return Dims{d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
}

Json volume_sidecar(const Dims& dims, double voxel_size_mm, long channels, const char* dtype, const Json& extra) {
  Json j;
  j["dims"] = {dims.nx, dims.ny, dims.nz};
  j["voxel_size_mm"] = voxel_size_mm;
  j["channels"] = channels;
  j["order"] = "x-fastest";
  j["dtype"] = dtype;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& base) { return with_ext(base, ".json"); }

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, const std::string& text) { write_binary(path, text); }

std::string read_text(const std::filesystem::path& path) { return read_binary(path); }

void write_signal_volume(const std::filesystem::path& base, const SignalVolume& vol, const Json& extra) {
  const std::size_t n = vol.dims.count();
  if (static_cast<std::size_t>(vol.data.cols()) != n) throw std::invalid_argument("signal volume: data does not match dims");
  std::string bytes;
  bytes.reserve(n * static_cast<std::size_t>(vol.channels()) * 4);
  for (Eigen::Index c = 0; c < vol.channels(); ++c) {
    for (std::size_t v = 0; v < n; ++v) append_f32(bytes, vol.data(c, static_cast<Eigen::Index>(v)));
  }
  write_binary(with_ext(base, ".f32"), bytes);
  write_json(sidecar_path(base), volume_sidecar(vol.dims, vol.voxel_size_mm, vol.channels(), "float32", extra));
}

SignalVolume read_signal_volume(const std::filesystem::path& base, Json* sidecar) {
  const Json j = read_json(sidecar_path(base));
  SignalVolume vol;
  vol.dims = dims_from(j);
  vol.voxel_size_mm = j.value("voxel_size_mm", 1.0);
  const long channels = j.at("channels").get<long>();
  const std::string bytes = read_binary(with_ext(base, ".f32"));
  const std::size_t n = vol.dims.count();
  if (bytes.size() != n * static_cast<std::size_t>(channels) * 4) {
    throw ValidationError("signal volume " + base.string() + ": file size does not match sidecar dims");
  }
  vol.data.resize(channels, static_cast<Eigen::Index>(n));
  const char* p = bytes.data();
  for (long c = 0; c < channels; ++c) {
    for (std::size_t v = 0; v < n; ++v, p += 4) vol.data(c, static_cast<Eigen::Index>(v)) = read_f32(p);
  }
  if (sidecar != nullptr) *sidecar = j;
  return vol;
}

void write_label_volume(const std::filesystem::path& base, const Dims& dims, double voxel_size_mm,
                        const std::vector<std::uint8_t>& labels, const Json& extra) {
  if (labels.size() != dims.count()) throw std::invalid_argument("label volume: size does not match dims");
  write_binary(with_ext(base, ".u8"), std::string(labels.begin(), labels.end()));
  write_json(sidecar_path(base), volume_sidecar(dims, voxel_size_mm, 1, "uint8", extra));
}

std::vector<std::uint8_t> read_label_volume(const std::filesystem::path& base, Dims* dims, Json* sidecar) {
  const Json j = read_json(sidecar_path(base));
  const Dims d = dims_from(j);
  const std::string bytes = read_binary(with_ext(base, ".u8"));
  if (bytes.size() != d.count()) throw ValidationError("label volume " + base.string() + ": size does not match dims");
  if (dims != nullptr) *dims = d;
  if (sidecar != nullptr) *sidecar = j;
  return std::vector<std::uint8_t>(bytes.begin(), bytes.end());
}

std::string format_fo_records(const FoVolume& vol) {
  std::string out;
  for (std::size_t v = 0; v < vol.voxels.size(); ++v) {
    int i, j, k;
    vol.dims.coords(v, i, j, k);
    const auto& fos = vol.voxels[v];
    out += std::to_string(i) + " " + std::to_string(j) + " " + std::to_string(k) + " " + std::to_string(fos.size());
    for (const auto& fo : fos) {
      out += " " + fmt(fo.direction.x()) + " " + fmt(fo.direction.y()) + " " + fmt(fo.direction.z()) + " " +
             fmt(fo.fraction);
    }
    out += "\n";
  }
  return out;
}

FoVolume parse_fo_records(const std::string& text, const Dims& dims) {
  FoVolume vol;
  vol.dims = dims;
  vol.voxels.resize(dims.count());
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int i, j, k;
    std::size_t n;
    if (!(ls >> i >> j >> k >> n)) throw ValidationError("FO record line " + std::to_string(line_no) + ": malformed");
    if (i < 0 || j < 0 || k < 0 || i >= dims.nx || j >= dims.ny || k >= dims.nz) {
      throw ValidationError("FO record line " + std::to_string(line_no) + ": voxel outside volume");
    }
    std::vector<FiberOrientation> fos;
    for (std::size_t p = 0; p < n; ++p) {
      double x, y, z, f;
      if (!(ls >> x >> y >> z >> f)) throw ValidationError("FO record line " + std::to_string(line_no) + ": truncated");
      fos.push_back({Direction::from_xyz(x, y, z), f});
    }
    const std::size_t v = dims.index(i, j, k);
    vol.voxels[v] = FOSet(std::move(fos));
  }
  return vol;
}

void write_fo_volume(const std::filesystem::path& base, const FoVolume& vol, const Json& extra) {
  write_text(with_ext(base, ".fo"), format_fo_records(vol));
  Json j;
  j["dims"] = {vol.dims.nx, vol.dims.ny, vol.dims.nz};
  j["provenance"] = vol.provenance;
  j["record_format"] = "i j k n (dx dy dz f)*n";
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_json(sidecar_path(base), j);
}

FoVolume read_fo_volume(const std::filesystem::path& base, Json* sidecar) {
  const Json j = read_json(sidecar_path(base));
  FoVolume vol = parse_fo_records(read_text(with_ext(base, ".fo")), dims_from(j));
  vol.provenance = j.value("provenance", std::string());
  if (sidecar != nullptr) *sidecar = j;
  return vol;
}

void write_gradient_table(const std::filesystem::path& path, const GradientScheme& scheme) {
  std::string out;
  for (const auto& g : scheme.gradients()) {
    out += fmt(g.direction.x()) + " " + fmt(g.direction.y()) + " " + fmt(g.direction.z()) + " " + fmt(g.b) + "\n";
  }
  write_text(path, out);
}

namespace {

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path, std::size_t columns) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double value;
    while (ls >> value) row.push_back(value);
    if (row.size() != columns || !ls.eof()) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                            " numbers");
    }
    const double norm = std::sqrt(row[0] * row[0] + row[1] * row[1] + row[2] * row[2]);
    if (std::abs(norm - 1.0) > 1e-6) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": direction is not unit norm");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

GradientScheme read_gradient_table(const std::filesystem::path& path) {
  std::vector<Gradient> gradients;
  for (const auto& r : read_rows(path, 4)) gradients.push_back({Direction::from_xyz(r[0], r[1], r[2]), r[3]});
  if (gradients.empty()) throw ValidationError(path.string() + ": no gradients");
  try {
    return GradientScheme(std::move(gradients));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_direction_set(const std::filesystem::path& path, const DirectionSet& dirs) {
  std::string out;
  for (const auto& d : dirs) out += fmt(d.x()) + " " + fmt(d.y()) + " " + fmt(d.z()) + "\n";
  write_text(path, out);
}

DirectionSet read_direction_set(const std::filesystem::path& path) {
  std::vector<Direction> dirs;
  for (const auto& r : read_rows(path, 3)) dirs.push_back(Direction::from_xyz(r[0], r[1], r[2]));
  return DirectionSet(std::move(dirs));
}

void save_model(const std::filesystem::path& path, const TrainedModel& model, const Json& extra) {
  const auto& p = model.params;
  Json header;
  header["K"] = p.inputs();
  header["N_coarse"] = p.outputs();
  header["depth"] = p.depth;
  header["lambda"] = p.lambda;
  header["tau"] = p.tau;
  header["region_id"] = model.region;
  header["training"] = {{"samples", model.training_samples},
                        {"configurations", model.configurations},
                        {"initialization", model.initialization},
                        {"loss_history", model.loss_history}};
  header["layout"] = "float32 little-endian W (N_coarse x K) then S (N_coarse x N_coarse), row-major";
  for (const auto& [k, v] : extra.items()) header[k] = v;

  std::string bytes = header.dump() + "\n";
  for (Eigen::Index r = 0; r < p.W.rows(); ++r)
    for (Eigen::Index c = 0; c < p.W.cols(); ++c) append_f32(bytes, p.W(r, c));
  for (Eigen::Index r = 0; r < p.S.rows(); ++r)
    for (Eigen::Index c = 0; c < p.S.cols(); ++c) append_f32(bytes, p.S(r, c));
  write_binary(path, bytes);
}

TrainedModel load_model(const std::filesystem::path& path, Json* header_out) {
  const std::string bytes = read_binary(path);
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw ValidationError(path.string() + ": missing model header");
  Json header;
  try {
    header = Json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": malformed model header: " + e.what());
  }
  TrainedModel model;
  const auto k = header.at("K").get<Eigen::Index>();
  const auto n = header.at("N_coarse").get<Eigen::Index>();
  if (bytes.size() - newline - 1 != static_cast<std::size_t>((n * k + n * n) * 4)) {
    throw ValidationError(path.string() + ": weight blob size does not match header");
  }
  auto& p = model.params;
  p.depth = header.at("depth").get<int>();
  p.lambda = header.at("lambda").get<double>();
  p.tau = header.at("tau").get<double>();
  p.W.resize(n, k);
  p.S.resize(n, n);
  const char* ptr = bytes.data() + newline + 1;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < k; ++c, ptr += 4) p.W(r, c) = read_f32(ptr);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c, ptr += 4) p.S(r, c) = read_f32(ptr);
  p.validate();
  model.region = header.at("region_id").get<int>();
  if (header.contains("training")) {
    const auto& t = header["training"];
    model.training_samples = t.value("samples", std::size_t{0});
    model.configurations = t.value("configurations", std::size_t{0});
    model.initialization = t.value("initialization", std::string());
    model.loss_history = t.value("loss_history", std::vector<double>{});
  }
  if (header_out != nullptr) *header_out = header;
  return model;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) out += std::to_string(e + 1) + "," + fmt(losses[e]) + "\n";
  write_text(path, out);
}

}  // namespace fordn::io
