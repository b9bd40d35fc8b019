#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fitted/matrix.hpp"
#include "fitted/rectifier.hpp"

namespace fitted {

// Prediction-matrix CSV: header `id,p0,p1,...,p{C-1}`, one example per row.
struct PredictionTable {
  std::vector<std::string> ids;
  Matrix probabilities;
};

// Rows whose sum is more than `tolerance` away from 1, or with entries
// outside [0,1], raise ParseError with the 1-based line number.
PredictionTable parse_prediction_csv(const std::string& text, const std::string& source,
                                     double tolerance = 1e-4);
PredictionTable load_prediction_csv(const std::filesystem::path& path, double tolerance = 1e-4);
std::string format_prediction_csv(const PredictionTable& table);

// Loads a matrix together with its sidecar space file ({"num_classes", "blocks"}).
// Throws ShapeMismatchError naming both files when the column count differs
// from the space's block count.
MemberPrediction load_member_prediction(const std::filesystem::path& matrix_path,
                                        const std::filesystem::path& space_path);

}  // namespace fitted
