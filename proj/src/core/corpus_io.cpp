#include "simt/corpus_io.hpp"

#include <charconv>
#include <fstream>

#include "simt/error.hpp"

namespace simt {

namespace fs = std::filesystem;

Sentence split_tokens(std::string_view line) {
    Sentence out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        std::size_t next = line.find(' ', pos);
        if (next == std::string_view::npos) {
            next = line.size();
        }
        if (next > pos) {
            out.emplace_back(line.substr(pos, next - pos));
        }
        pos = next + 1;
    }
    return out;
}

std::vector<std::string> read_lines(const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<Sentence> read_token_file(const fs::path &path) {
    std::vector<Sentence> out;
    for (const auto &line : read_lines(path)) {
        out.push_back(split_tokens(line));
    }
    return out;
}

void write_token_file(const fs::path &path, const std::vector<Sentence> &sentences) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (const auto &sentence : sentences) {
        for (std::size_t i = 0; i < sentence.size(); ++i) {
            if (i) {
                out << ' ';
            }
            out << sentence[i];
        }
        out << '\n';
    }
}

Alignment parse_alignment_line(std::string_view line) {
    Alignment links;
    for (const auto &field : split_tokens(line)) {
        const auto dash = field.find('-');
        if (dash == std::string::npos) {
            throw FormatError("alignment: malformed link '" + field + "'");
        }
        AlignLink link;
        const char *begin = field.data();
        auto r1 = std::from_chars(begin, begin + dash, link.target);
        auto r2 = std::from_chars(begin + dash + 1, begin + field.size(), link.source);
        if (r1.ec != std::errc{} || r1.ptr != begin + dash || r2.ec != std::errc{} ||
            r2.ptr != begin + field.size()) {
            throw FormatError("alignment: malformed link '" + field + "'");
        }
        links.push_back(link);
    }
    return links;
}

std::string format_alignment(const Alignment &alignment) {
    std::string out;
    for (const auto &link : alignment) {
        if (!out.empty()) {
            out += ' ';
        }
        out += std::to_string(link.target) + "-" + std::to_string(link.source);
    }
    return out;
}

std::vector<Alignment> read_alignment_file(const fs::path &path) {
    std::vector<Alignment> out;
    for (const auto &line : read_lines(path)) {
        out.push_back(parse_alignment_line(line));
    }
    return out;
}

void write_alignment_file(const fs::path &path, const std::vector<Alignment> &alignments) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (const auto &a : alignments) {
        out << format_alignment(a) << '\n';
    }
}

std::vector<SentencePair> load_parallel_corpus(const Vocabulary &vocab, const fs::path &source,
                                               const fs::path &target,
                                               const std::optional<fs::path> &alignment) {
    const auto src = read_token_file(source);
    const auto tgt = read_token_file(target);
    if (src.size() != tgt.size()) {
        throw FormatError("corpus: " + source.string() + " has " + std::to_string(src.size()) +
                          " lines but " + target.string() + " has " + std::to_string(tgt.size()));
    }
    std::vector<Alignment> links;
    if (alignment) {
        links = read_alignment_file(*alignment);
        if (links.size() != src.size()) {
            throw FormatError("corpus: alignment file line count differs from corpus");
        }
    }
    std::vector<SentencePair> pairs;
    pairs.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        SentencePair pair{vocab.encode_sentence(src[i]), vocab.encode_sentence(tgt[i]), std::nullopt};
        if (alignment) {
            pair.gold_alignment = std::move(links[i]);
        }
        try {
            validate_pair(pair, vocab);
        } catch (const ValidationError &e) {
            throw ValidationError("corpus line " + std::to_string(i + 1) + ": " + e.what());
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void write_parallel_corpus(const Vocabulary &vocab, const std::vector<SentencePair> &pairs,
                           const fs::path &source, const fs::path &target,
                           const std::optional<fs::path> &alignment) {
    std::vector<Sentence> src;
    std::vector<Sentence> tgt;
    std::vector<Alignment> links;
    for (const auto &pair : pairs) {
        auto words = [&](const TokenSeq &seq) {
            Sentence s;
            for (TokenId id : seq) {
                if (id != vocab.eos()) {
                    s.push_back(vocab.token(id));
                }
            }
            return s;
        };
        src.push_back(words(pair.source));
        tgt.push_back(words(pair.target));
        if (alignment) {
            if (!pair.gold_alignment) {
                throw ValidationError("corpus: pair without alignment cannot be written with one");
            }
            links.push_back(*pair.gold_alignment);
        }
    }
    write_token_file(source, src);
    write_token_file(target, tgt);
    if (alignment) {
        write_alignment_file(*alignment, links);
    }
}

} // namespace simt
