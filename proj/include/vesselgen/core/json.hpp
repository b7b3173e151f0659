#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

#include "vesselgen/core/types.hpp"

namespace vg {

using Json = nlohmann::json;

Json to_json(PointSpan pts);
Points points_from_json(const Json& j);
Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j, int indent = 1);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vg
