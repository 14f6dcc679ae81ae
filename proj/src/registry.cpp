#include "segadv/registry.hpp"

#include <mutex>

#include "segadv/toy_segmenter.hpp"

namespace segadv {

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, AdapterFactory> factories;

  Registry() {
    auto toy = [](std::string name, ToyParams params) -> AdapterFactory {
      return [name, params](const AdapterOptions&) {
        return std::make_unique<ToySegmenter<double>>(params, name);
      };
    };
    ToyParams variant_b;
    variant_b.gain = 15.0;
    variant_b.threshold = 0.08;
    factories["toy"] = toy("toy", ToyParams{});
    factories["toyA"] = toy("toyA", ToyParams{});
    factories["toyB"] = toy("toyB", variant_b);
    factories["toy_color"] = toy("toy_color", ToyParams::color_only());
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_adapter(const std::string& name, AdapterFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories[name] = std::move(factory);
}

bool has_adapter(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  return r.factories.contains(name);
}

std::vector<std::string> registered_adapters() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.factories) names.push_back(name);
  return names;
}

std::unique_ptr<SegmenterAdapter<double>> make_adapter(const std::string& name, const AdapterOptions& options) {
  AdapterFactory factory;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.factories.find(name);
    if (it == r.factories.end()) {
      std::string known;
      for (const auto& [n, _] : r.factories) known += (known.empty() ? "" : ", ") + n;
      throw DomainError("unknown segmenter '" + name + "' (registered: " + known + ")");
    }
    factory = it->second;
  }
  auto adapter = factory(options);
  if (!adapter) throw AdapterError("factory for '" + name + "' returned no adapter");
  return adapter;
}

}  // namespace segadv
