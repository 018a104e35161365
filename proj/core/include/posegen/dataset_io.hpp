#pragma once

#include <string>

#include "posegen/scene.hpp"

namespace posegen::io {

/// Line-delimited dataset records, one per sample:
///   split  coordinate  rotation (9 numbers, row-major)  translation (3)  features (F)
/// Plain-text decimal with 17 significant digits; '#' lines are comments.
void write_dataset(const std::string& path, const scene::Dataset& dataset);

scene::Dataset read_dataset(const std::string& path);

/// Scene manifest: JSON description sufficient to rebuild the SceneSpec and
/// its ground-truth mode oracle.
void write_scene_manifest(const std::string& path, const scene::SceneSpec& scene);

scene::SceneSpec read_scene_manifest(const std::string& path);

}  // namespace posegen::io
