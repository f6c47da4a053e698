#include "lfbp/triplet_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lfbp {
namespace {

using nlohmann::json;

double number_field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw InvalidTriplet(std::string(name) + ": missing field");
  const json& v = doc.at(name);
  if (!v.is_number()) throw InvalidTriplet(std::string(name) + ": expected a number");
  return v.get<double>();
}

FiniteTriplet finite_from_json(const json& doc) {
  if (!doc.contains("K") || !doc.at("K").is_array() || doc.at("K").empty()) {
    throw InvalidTriplet("K: expected a non-empty array of rows");
  }
  const json& rows = doc.at("K");
  const auto d = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd K(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const json& row = rows.at(i);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d) {
      throw InvalidTriplet("K[" + std::to_string(i) + "]: expected " + std::to_string(d) +
                           " numbers");
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!row.at(j).is_number()) {
        throw InvalidTriplet("K[" + std::to_string(i) + "][" + std::to_string(j) +
                             "]: expected a number");
      }
      K(i, j) = row.at(j).get<double>();
    }
  }
  if (!doc.contains("gamma") || !doc.at("gamma").is_array()) {
    throw InvalidTriplet("gamma: expected an array");
  }
  const json& g = doc.at("gamma");
  Eigen::VectorXd gamma(static_cast<Eigen::Index>(g.size()));
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!g.at(j).is_number()) {
      throw InvalidTriplet("gamma[" + std::to_string(j) + "]: expected a number");
    }
    gamma(static_cast<Eigen::Index>(j)) = g.at(j).get<double>();
  }
  return FiniteTriplet(std::move(K), std::move(gamma), number_field(doc, "m"));
}

}  // namespace

Triplet parse_triplet(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, json_text.size());
    const auto line = 1 + std::count(json_text.begin(), json_text.begin() + upto, '\n');
    throw InvalidTriplet("line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw InvalidTriplet("document: expected a JSON object");
  if (!doc.contains("family") || !doc.at("family").is_string()) {
    throw InvalidTriplet("family: missing or not a string");
  }
  const auto family = doc.at("family").get<std::string>();
  if (family == "finite") return finite_from_json(doc);
  if (family == "exp") {
    return ExpFamilyTriplet(number_field(doc, "lambda"), number_field(doc, "mu"),
                            number_field(doc, "m"));
  }
  throw InvalidTriplet("family: unknown family '" + family + "' (expected finite or exp)");
}

Triplet load_triplet(const std::string& source) {
  const auto first = source.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && source[first] == '{') return parse_triplet(source);
  std::ifstream in(source);
  if (!in) throw InvalidTriplet("cannot open triplet file '" + source + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_triplet(buf.str());
}

std::string triplet_to_json(const Triplet& triplet) {
  json doc;
  if (const auto* f = std::get_if<FiniteTriplet>(&triplet)) {
    doc["family"] = "finite";
    json rows = json::array();
    for (Eigen::Index i = 0; i < f->dim(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < f->dim(); ++j) row.push_back(f->K()(i, j));
      rows.push_back(row);
    }
    doc["K"] = rows;
    doc["gamma"] = std::vector<double>(f->gamma().data(), f->gamma().data() + f->dim());
    doc["m"] = f->m();
  } else {
    const auto& e = std::get<ExpFamilyTriplet>(triplet);
    doc["family"] = "exp";
    doc["lambda"] = e.lambda();
    doc["mu"] = e.mu();
    doc["m"] = e.m();
  }
  return doc.dump();
}

}  // namespace lfbp
