#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fordn/geometry.hpp"
#include "fordn/network.hpp"
#include "fordn/pipeline.hpp"
#include "fordn/volume.hpp"

namespace fordn::io {

using Json = nlohmann::ordered_json;

/// `<base>.json` next to a data file `<base><ext>`.
std::filesystem::path sidecar_path(const std::filesystem::path& base);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Float32 little-endian, x fastest, then y, z, channel; sidecar holds
/// {dims, voxel_size_mm, channels, order, dtype} merged with `extra`.
void write_signal_volume(const std::filesystem::path& base, const SignalVolume& vol, const Json& extra = Json::object());
SignalVolume read_signal_volume(const std::filesystem::path& base, Json* sidecar = nullptr);

void write_label_volume(const std::filesystem::path& base, const Dims& dims, double voxel_size_mm,
                        const std::vector<std::uint8_t>& labels, const Json& extra = Json::object());
std::vector<std::uint8_t> read_label_volume(const std::filesystem::path& base, Dims* dims = nullptr,
                                            Json* sidecar = nullptr);

/// One line per voxel: `i j k n (dx dy dz f)*n`.
std::string format_fo_records(const FoVolume& vol);
FoVolume parse_fo_records(const std::string& text, const Dims& dims);
void write_fo_volume(const std::filesystem::path& base, const FoVolume& vol, const Json& extra = Json::object());
FoVolume read_fo_volume(const std::filesystem::path& base, Json* sidecar = nullptr);

/// `gx gy gz b` per line; directions must be unit within 1e-6.
void write_gradient_table(const std::filesystem::path& path, const GradientScheme& scheme);
GradientScheme read_gradient_table(const std::filesystem::path& path);
void write_direction_set(const std::filesystem::path& path, const DirectionSet& dirs);
DirectionSet read_direction_set(const std::filesystem::path& path);

/// JSON header line, then float32 little-endian W and S, row-major.
void save_model(const std::filesystem::path& path, const TrainedModel& model, const Json& extra = Json::object());
TrainedModel load_model(const std::filesystem::path& path, Json* header = nullptr);
void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses);

}  // namespace fordn::io
