#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <variant>

#include <json.hpp>

#include "simt/models/micro_model.hpp"
#include "simt/models/table_model.hpp"
#include "simt/vocabulary.hpp"

namespace simt::models {

/// Container version written into every model file.
inline constexpr int kModelFileVersion = 1;

nlohmann::json vocabulary_to_json(const Vocabulary &vocab);
Vocabulary vocabulary_from_json(const nlohmann::json &j);

nlohmann::json table_model_to_json(const TableModel &model);
TableModel table_model_from_json(const nlohmann::json &j);

nlohmann::json micro_model_to_json(const MicroModel &model, const Vocabulary &vocab);
MicroModel micro_model_from_json(const nlohmann::json &j);

/// A model file: either kind of model plus the vocabulary it was built with.
struct LoadedModel {
    std::variant<TableModel, MicroModel> model;
    Vocabulary vocab;

    const TranslationModel &kernel() const;
    bool is_table() const { return std::holds_alternative<TableModel>(model); }
};

/// Writes the model as JSON. `provenance` (may be null) is stored under
/// "config" so outputs carry the settings that produced them.
void save_model(const std::filesystem::path &path, const TableModel &model, const Vocabulary &vocab,
                const nlohmann::json &provenance = nullptr);
void save_model(const std::filesystem::path &path, const MicroModel &model, const Vocabulary &vocab,
                const nlohmann::json &provenance = nullptr);

/// Throws FormatError on corrupt files, unknown versions, or a vocabulary hash
/// mismatch.
LoadedModel load_model(const std::filesystem::path &path);

} // namespace simt::models
