#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simt/types.hpp"
#include "simt/vocabulary.hpp"

namespace simt {

using Sentence = std::vector<std::string>;

/// Splits on single spaces; empty fields (double spaces) are dropped.
Sentence split_tokens(std::string_view line);

/// One sentence per line, tokens separated by spaces. EOS is never stored in
/// files.
std::vector<Sentence> read_token_file(const std::filesystem::path &path);
void write_token_file(const std::filesystem::path &path, const std::vector<Sentence> &sentences);

/// Parses `t-s t-s ...` (1-based) alignment lines.
Alignment parse_alignment_line(std::string_view line);
std::string format_alignment(const Alignment &alignment);
std::vector<Alignment> read_alignment_file(const std::filesystem::path &path);
void write_alignment_file(const std::filesystem::path &path, const std::vector<Alignment> &alignments);

/// Loads a line-aligned parallel corpus, encoding with `vocab` (OOV -> UNK)
/// and appending EOS on both sides. Every pair is validated.
std::vector<SentencePair> load_parallel_corpus(const Vocabulary &vocab,
                                               const std::filesystem::path &source,
                                               const std::filesystem::path &target,
                                               const std::optional<std::filesystem::path> &alignment = {});

/// Writes the token strings of each side (EOS stripped) and, when every pair
/// carries one, the gold alignment.
void write_parallel_corpus(const Vocabulary &vocab, const std::vector<SentencePair> &pairs,
                           const std::filesystem::path &source, const std::filesystem::path &target,
                           const std::optional<std::filesystem::path> &alignment = {});

std::vector<std::string> read_lines(const std::filesystem::path &path);

} // namespace simt
