#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "segadv/segmenter.hpp"

namespace segadv {

struct AdapterOptions {
  std::string checkpoint;  ///< path handed to checkpoint-backed adapters; unused by the toys
};

using AdapterFactory = std::function<std::unique_ptr<SegmenterAdapter<double>>(const AdapterOptions&)>;

/// Name -> factory table. Built-in entries:
///   toy, toyA   ToyParams{} (gain 25, threshold 0.05)
///   toyB        gain 15, threshold 0.08, same detail channel
///   toy_color   color-distance only (no detail channel)
/// External SAM-family adapters register themselves under their own names
/// (e.g. "vit_b") before the harness runs.
void register_adapter(const std::string& name, AdapterFactory factory);
bool has_adapter(const std::string& name);
std::vector<std::string> registered_adapters();

/// Throws DomainError naming the known adapters when `name` is not registered.
std::unique_ptr<SegmenterAdapter<double>> make_adapter(const std::string& name, const AdapterOptions& options = {});

}  // namespace segadv
