#include "bpr/dataset.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "bpr/errors.hpp"

namespace bpr {
namespace {

using nlohmann::json;

DenseVector to_vector(const json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string("'") + field + "' must be an array of numbers");
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument(std::string("'") + field + "' contains a non-number");
    values.push_back(v.get<double>());
  }
  return DenseVector(std::move(values));
}

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + field + "'");
  return *it;
}

// Calls fn(object, line_number) for every non-blank line; wraps failures in DataError.
void for_each_line(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("line is not a JSON object");
      fn(obj, line_no);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": " << e.what();
      throw DataError(msg.str(), line_no);
    }
  }
}

void write_lines(const std::filesystem::path& path, std::size_t count, const std::function<json(std::size_t)>& make) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < count; ++i) out << make(i).dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

json vector_json(const DenseVector& v) { return json(std::vector<double>(v.values().begin(), v.values().end())); }

}  // namespace

std::vector<TrainingInstance> read_training_jsonl(const std::filesystem::path& path) {
  std::vector<TrainingInstance> out;
  for_each_line(path, [&](const json& obj, std::size_t) {
    TrainingInstance inst;
    inst.question = to_vector(require(obj, "question"), "question");
    inst.positive = to_vector(require(obj, "positive"), "positive");
    if (auto it = obj.find("negatives"); it != obj.end()) {
      if (!it->is_array()) throw std::invalid_argument("'negatives' must be an array of arrays");
      for (const auto& neg : *it) inst.negatives.push_back(to_vector(neg, "negatives"));
    }
    check_instance(inst);
    if (!out.empty() && inst.input_dims() != out.front().input_dims()) {
      throw std::invalid_argument("input dims differ from earlier lines");
    }
    out.push_back(std::move(inst));
  });
  return out;
}

void write_training_jsonl(const std::filesystem::path& path, std::span<const TrainingInstance> data) {
  write_lines(path, data.size(), [&](std::size_t i) {
    json negs = json::array();
    for (const auto& n : data[i].negatives) negs.push_back(vector_json(n));
    return json{{"question", vector_json(data[i].question)},
                {"positive", vector_json(data[i].positive)},
                {"negatives", std::move(negs)}};
  });
}

std::vector<DenseVector> read_corpus_jsonl(const std::filesystem::path& path) {
  std::vector<DenseVector> out;
  for_each_line(path, [&](const json& obj, std::size_t) {
    const auto id = require(obj, "id").get<std::uint64_t>();
    if (id != out.size()) {
      throw std::invalid_argument("passage id " + std::to_string(id) + " out of order, expected " +
                                  std::to_string(out.size()));
    }
    DenseVector v = to_vector(require(obj, "vector"), "vector");
    if (!out.empty() && v.dims() != out.front().dims()) throw std::invalid_argument("vector dims differ from earlier lines");
    out.push_back(std::move(v));
  });
  if (out.empty()) throw DataError(path.string() + ": corpus is empty");
  return out;
}

void write_corpus_jsonl(const std::filesystem::path& path, std::span<const DenseVector> corpus) {
  write_lines(path, corpus.size(), [&](std::size_t i) { return json{{"id", i}, {"vector", vector_json(corpus[i])}}; });
}

std::vector<QueryRecord> read_queries_jsonl(const std::filesystem::path& path) {
  std::vector<QueryRecord> out;
  for_each_line(path, [&](const json& obj, std::size_t) {
    QueryRecord q;
    q.id = require(obj, "id").get<std::uint64_t>();
    q.vector = to_vector(require(obj, "vector"), "vector");
    if (auto it = obj.find("relevant"); it != obj.end()) q.relevant = it->get<std::vector<PassageId>>();
    if (!out.empty() && q.vector.dims() != out.front().vector.dims()) {
      throw std::invalid_argument("vector dims differ from earlier lines");
    }
    out.push_back(std::move(q));
  });
  return out;
}

void write_queries_jsonl(const std::filesystem::path& path, std::span<const QueryRecord> queries) {
  write_lines(path, queries.size(), [&](std::size_t i) {
    return json{{"id", queries[i].id}, {"vector", vector_json(queries[i].vector)}, {"relevant", queries[i].relevant}};
  });
}

}  // namespace bpr
