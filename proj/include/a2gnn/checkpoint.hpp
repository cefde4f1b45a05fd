#pragma once

#include "a2gnn/training.hpp"

#include <stdexcept>
#include <string>

namespace a2gnn {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Text checkpoint. Every double is written as a hex float so a reload is bit-exact.
void save_checkpoint(const std::string& path, const ModelState& state);
ModelState load_checkpoint(const std::string& path);

std::string checkpoint_text(const ModelState& state);
ModelState parse_checkpoint(const std::string& text, const std::string& origin = "<text>");

}  // namespace a2gnn
