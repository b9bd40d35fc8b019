#include "fitted/prediction_io.hpp"

#include <cmath>
#include <sstream>

#include "fitted/csv.hpp"
#include "fitted/errors.hpp"
#include "fitted/space_io.hpp"

namespace fitted {

PredictionTable parse_prediction_csv(const std::string& text, const std::string& source,
                                     double tolerance) {
  const auto lines = csv::split_lines(text);
  if (lines.empty()) throw SchemaError(source + ": empty file");
  const auto header = csv::split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "id") {
    throw SchemaError(source + ": header must be `id,p0,p1,...`");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "p" + std::to_string(j - 1)) {
      throw SchemaError(source + ": header column " + std::to_string(j) + " must be `p" +
                        std::to_string(j - 1) + "`");
    }
  }
  const std::size_t cols = header.size() - 1;
  PredictionTable table;
  std::vector<double> values;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (lines[li].find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto fields = csv::split_fields(lines[li]);
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no, "expected " + std::to_string(header.size()) +
                                            " fields, got " + std::to_string(fields.size()));
    }
    table.ids.emplace_back(fields[0]);
    double sum = 0.0;
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = 0.0;
      if (!csv::parse_double(fields[j], v)) {
        throw ParseError(source, line_no, "probability `" + std::string(fields[j]) +
                                              "` is not a number");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ParseError(source, line_no, "probability outside [0,1]");
      }
      sum += v;
      values.push_back(v);
    }
    if (!(std::abs(sum - 1.0) <= tolerance)) {
      throw ParseError(source, line_no, "row sums to " + csv::format_double(sum) +
                                            ", not 1 within " + csv::format_double(tolerance));
    }
  }
  table.probabilities = Matrix(table.ids.size(), cols, std::move(values));
  return table;
}

PredictionTable load_prediction_csv(const std::filesystem::path& path, double tolerance) {
  return parse_prediction_csv(read_text_file(path), path.string(), tolerance);
}

std::string format_prediction_csv(const PredictionTable& table) {
  std::ostringstream os;
  os << "id";
  for (std::size_t j = 0; j < table.probabilities.cols(); ++j) os << ",p" << j;
  os << '\n';
  for (std::size_t r = 0; r < table.probabilities.rows(); ++r) {
    os << (r < table.ids.size() ? table.ids[r] : std::to_string(r));
    for (double v : table.probabilities.row(r)) os << ',' << csv::format_double(v);
    os << '\n';
  }
  return os.str();
}

MemberPrediction load_member_prediction(const std::filesystem::path& matrix_path,
                                        const std::filesystem::path& space_path) {
  SuperclassSpace space = load_space(space_path);
  PredictionTable table = load_prediction_csv(matrix_path);
  if (table.probabilities.cols() != space.num_blocks()) {
    throw ShapeMismatchError(matrix_path.string() + ": " +
                             std::to_string(table.probabilities.cols()) +
                             " probability columns but sidecar " + space_path.string() +
                             " defines " + std::to_string(space.num_blocks()) + " blocks");
  }
  return MemberPrediction{std::move(space), std::move(table.probabilities)};
}

}  // namespace fitted
