#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ser/nn.hpp"

namespace ser {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON document: format_version, architecture dimensions, and every tensor
/// as {rows, cols, data} with data row-major.
std::string checkpoint_to_json(const nn::ModelParams& p);
nn::ModelParams checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const nn::ModelParams& p);
nn::ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ser
