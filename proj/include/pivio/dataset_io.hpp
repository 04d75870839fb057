#pragma once

#include "pivio/config.hpp"
#include "pivio/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>

namespace pivio {

/// Raised on unreadable or malformed dataset files; parse errors carry the
/// file name and line number.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes the dataset directory: imu.csv, keyframes.csv, tracks.csv,
/// landmarks.csv and the configuration echoed verbatim as config.json.
/// Floating point uses 17 significant digits throughout.
void write_dataset(const SimDataset& data, const std::filesystem::path& dir,
                   const nlohmann::json& config_echo);

SimDataset load_dataset(const std::filesystem::path& dir);

}  // namespace pivio
