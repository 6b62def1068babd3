#include "simt/models/model_io.hpp"

#include <fstream>
#include <sstream>

#include "simt/error.hpp"

namespace simt::models {

using nlohmann::json;

namespace {

Distribution dist_from_json(const json &j, std::size_t size) {
    auto probs = j.get<std::vector<double>>();
    if (probs.size() != size) {
        throw FormatError("model file: distribution has " + std::to_string(probs.size()) +
                          " entries, expected " + std::to_string(size));
    }
    return Distribution(std::move(probs));
}

void write_json(const std::filesystem::path &path, const json &j) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << j.dump() << '\n';
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace

json vocabulary_to_json(const Vocabulary &vocab) {
    return {{"tokens", vocab.tokens()},
            {"specials",
             {{"bos", vocab.specials().bos}, {"eos", vocab.specials().eos}, {"unk", vocab.specials().unk}}},
            {"freq_rank", vocab.freq_ranks()}};
}

Vocabulary vocabulary_from_json(const json &j) {
    SpecialTokens specials{j.at("specials").at("bos").get<std::string>(),
                           j.at("specials").at("eos").get<std::string>(),
                           j.at("specials").at("unk").get<std::string>()};
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>(), std::move(specials),
                      j.value("freq_rank", std::vector<int>{}));
}

json table_model_to_json(const TableModel &model) {
    json entries = json::array();
    for (const auto &[key, dist] : model.entries()) {
        entries.push_back({{"src", key.first}, {"tgt", key.second}, {"dist", dist.probs()}});
    }
    return {{"default", model.default_dist().probs()},
            {"backoff", format_backoff(model.backoff())},
            {"entries", std::move(entries)}};
}

TableModel table_model_from_json(const json &j) {
    auto def = j.at("default").get<std::vector<double>>();
    const std::size_t size = def.size();
    TableModel model(Distribution(std::move(def)), parse_backoff(j.at("backoff").get<std::string>()));
    for (const auto &e : j.at("entries")) {
        model.set_entry(e.at("src").get<TokenSeq>(), e.at("tgt").get<TokenSeq>(),
                        dist_from_json(e.at("dist"), size));
    }
    return model;
}

json micro_model_to_json(const MicroModel &model, const Vocabulary &vocab) {
    const auto &cfg = model.config();
    json tensors = json::object();
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        const Matrix &m = model.params().tensors[i];
        tensors[std::string(tensor_name(static_cast<Tensor>(i)))] = {
            {"shape", {m.rows(), m.cols()}},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
    }
    return {{"meta",
             {{"d", cfg.d},
              {"max_len", cfg.max_len},
              {"mode", std::string(to_string(cfg.mode))},
              {"vocab_hash", vocab.hash()}}},
            {"tensors", std::move(tensors)}};
}

MicroModel micro_model_from_json(const json &j) {
    const json &meta = j.at("meta");
    MicroConfig cfg;
    cfg.d = meta.at("d").get<int>();
    cfg.max_len = meta.at("max_len").get<int>();
    cfg.mode = parse_encoder_mode(meta.at("mode").get<std::string>());
    const json &tensors = j.at("tensors");
    const json &embed = tensors.at("embed");
    cfg.vocab_size = embed.at("shape").at(0).get<std::size_t>();

    MicroParams params = MicroParams::zeros(cfg);
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        const std::string name(tensor_name(static_cast<Tensor>(i)));
        const json &t = tensors.at(name);
        const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
        const auto data = t.at("data").get<std::vector<double>>();
        Matrix &dst = params.tensors[i];
        if (shape.size() != 2 || shape[0] != dst.rows() || shape[1] != dst.cols() ||
            static_cast<Eigen::Index>(data.size()) != dst.size()) {
            throw FormatError("model file: tensor '" + name + "' has inconsistent shape or data");
        }
        std::copy(data.begin(), data.end(), dst.data());
    }
    return MicroModel(cfg, std::move(params));
}

const TranslationModel &LoadedModel::kernel() const {
    return std::visit([](const auto &m) -> const TranslationModel & { return m; }, model);
}

void save_model(const std::filesystem::path &path, const TableModel &model, const Vocabulary &vocab,
                const json &provenance) {
    json j = table_model_to_json(model);
    j["version"] = kModelFileVersion;
    j["kind"] = "table";
    j["vocab"] = vocabulary_to_json(vocab);
    j["vocab_hash"] = vocab.hash();
    if (!provenance.is_null()) {
        j["config"] = provenance;
    }
    write_json(path, j);
}

void save_model(const std::filesystem::path &path, const MicroModel &model, const Vocabulary &vocab,
                const json &provenance) {
    if (model.config().vocab_size != vocab.size()) {
        throw ValidationError("save_model: vocabulary size differs from model");
    }
    json j = micro_model_to_json(model, vocab);
    j["version"] = kModelFileVersion;
    j["kind"] = "micro";
    j["vocab"] = vocabulary_to_json(vocab);
    if (!provenance.is_null()) {
        j["config"] = provenance;
    }
    write_json(path, j);
}

LoadedModel load_model(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    json j;
    try {
        j = json::parse(buffer.str());
    } catch (const json::exception &e) {
        throw FormatError("corrupt model file " + path.string() + ": " + e.what());
    }
    try {
        if (!j.is_object() || !j.contains("version")) {
            throw FormatError("model file " + path.string() + " has no version");
        }
        if (j.at("version").get<int>() != kModelFileVersion) {
            throw FormatError("model file " + path.string() + " has unsupported version " +
                              j.at("version").dump());
        }
        Vocabulary vocab = vocabulary_from_json(j.at("vocab"));
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "table") {
            TableModel model = table_model_from_json(j);
            if (j.value("vocab_hash", vocab.hash()) != vocab.hash() ||
                model.vocab_size() != vocab.size()) {
                throw FormatError("model file " + path.string() + ": vocabulary mismatch");
            }
            return LoadedModel{std::move(model), std::move(vocab)};
        }
        if (kind == "micro") {
            if (j.at("meta").at("vocab_hash").get<std::string>() != vocab.hash()) {
                throw FormatError("model file " + path.string() + ": vocabulary hash mismatch");
            }
            MicroModel model = micro_model_from_json(j);
            if (model.config().vocab_size != vocab.size()) {
                throw FormatError("model file " + path.string() + ": vocabulary size mismatch");
            }
            auto cfg = model.config();
            cfg.bos = vocab.bos();
            return LoadedModel{MicroModel(cfg, model.params()), std::move(vocab)};
        }
        throw FormatError("model file " + path.string() + ": unknown kind '" + kind + "'");
    } catch (const json::exception &e) {
        throw FormatError("corrupt model file " + path.string() + ": " + e.what());
    } catch (const ValidationError &e) {
        throw FormatError("corrupt model file " + path.string() + ": " + e.what());
    } catch (const ConfigError &e) {
        throw FormatError("corrupt model file " + path.string() + ": " + e.what());
    }
}

} // namespace simt::models
