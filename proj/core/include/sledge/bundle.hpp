#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "sledge/document.hpp"

namespace sledge {

/// `<dir>/document.json` + `layers/step_<i>.png` + `masks/step_<i>.png`.
/// The directory is replaced through a temporary sibling and renames;
/// `extra_files` (relative path -> bytes) are written alongside.
void save_bundle(const DesignDocument& doc, const std::filesystem::path& dir,
                 const std::map<std::string, std::string>& extra_files = {});

/// Throws not_found if the directory or document.json is missing and
/// corrupt_document for schema or raster problems.
DesignDocument load_bundle(const std::filesystem::path& dir);

/// The canonical document.json text (2-space indent, LF, fixed key order).
std::string document_json(const DesignDocument& doc);

}  // namespace sledge
