#pragma once

// Pretrained word embeddings in the common text format: a "<count> <dim>"
// header, then one "<token> <dim floats>" line per word.

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "evdag/error.hpp"

namespace evdag {

struct EmbeddingTable {
  int dim = 0;
  std::vector<std::string> words; // file order, without the UNK row
  std::unordered_map<std::string, std::vector<float>> vectors;
};

inline EmbeddingTable load_word_embeddings(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open embeddings file '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    fail(ErrorCode::Parse, path + ":1: missing '<count> <dim>' header");
  long count = 0;
  int dim = 0;
  {
    std::istringstream hs(header);
    if (!(hs >> count >> dim))
      fail(ErrorCode::Parse, path + ":1: bad '<count> <dim>' header '" + header + "'");
  }
  if (dim != expected_dim)
    fail(ErrorCode::Config, "embeddings have dimension " + std::to_string(dim) +
                                " but the configured word dimension is " +
                                std::to_string(expected_dim));

  EmbeddingTable table;
  table.dim = dim;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<float> vec(dim);
    for (int i = 0; i < dim; ++i) {
      if (!(ls >> vec[i]))
        fail(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": expected " +
                                   std::to_string(dim) + " floats for '" + word + "'");
    }
    if (table.vectors.emplace(word, std::move(vec)).second) table.words.push_back(word);
  }
  if ((long)table.words.size() != count)
    fail(ErrorCode::Parse, path + ": header declares " + std::to_string(count) +
                               " words but the file has " + std::to_string(table.words.size()));
  return table;
}

} // namespace evdag
