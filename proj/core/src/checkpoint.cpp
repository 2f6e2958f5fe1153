#include "agcn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "agcn/error.hpp"
#include "agcn/tensor_io.hpp"

namespace agcn {

void save_checkpoint(const std::filesystem::path& dir, const AgcnModel& model) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw DataError("cannot write " + (dir / "manifest.txt").string());
  manifest << config_to_text(model.config());
  for (const Parameter& p : model.params()) {
    save_agt(dir / (p.name + ".agt"), p.value);
    manifest << "# param " << p.name << ' ' << shape_str(p.value.shape()) << '\n';
  }
}

std::unique_ptr<AgcnModel> load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.txt";
  if (!std::filesystem::exists(manifest)) throw ConfigError("checkpoint: missing " + manifest.string());
  auto model = std::make_unique<AgcnModel>(load_config(manifest));
  for (Parameter& p : model->params()) {
    const auto file = dir / (p.name + ".agt");
    if (!std::filesystem::exists(file)) throw DataError("checkpoint: missing tensor " + file.string());
    Tensor t = load_agt(file);
    if (t.shape() != p.value.shape()) {
      throw DataError("checkpoint: " + p.name + " has shape " + shape_str(t.shape()) + ", model expects " +
                      shape_str(p.value.shape()));
    }
    p.value = std::move(t);
  }
  return model;
}

}  // namespace agcn
