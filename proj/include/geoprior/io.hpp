#pragma once

#include <string>
#include <vector>

#include "geoprior/domain.hpp"
#include "geoprior/geonet.hpp"
#include "geoprior/imbalance.hpp"

namespace geoprior {

// Observation CSV: header
//   obs_id,latitude,longitude,date,label_l1,label_l2,label_l3
// UTF-8, '.' decimal separator, ISO-8601 dates. The hierarchy travels in the
// label columns, so one flat file carries both data and taxonomy.

RawDataset read_observations_csv(const std::string& path);
void write_observations_csv(const std::string& path, const Dataset& dataset);

// Probability matrix CSV: header "obs_id" followed by the vocabulary labels
// in vocabulary order; one ProbVector per row. Row sums are accepted within
// 1e-6 and renormalized exactly on ingest.

ProbMatrix read_prob_matrix(const std::string& path);
void write_prob_matrix(const std::string& path, const ProbMatrix& matrix);

// Per-class weights CSV: header "label,weight", vocabulary order.
void write_weights_csv(const std::string& path, const std::vector<std::string>& labels,
                       const std::vector<double>& weights);

// Training history CSV, one row per epoch.
void write_history_csv(const std::string& path, const TrainHistory& history);

/// Serialized resample plan for audit: one row per output sample (or per
/// class for weight plans).
void write_plan_csv(const std::string& path, const ResamplePlan& plan,
                    const std::vector<std::string>& class_labels,
                    const std::vector<std::vector<std::string>>& source_ids_by_class);

/// Encoded-feature table: obs_id,label_l3,f0..f5.
void write_features_csv(const std::string& path, const std::vector<std::string>& ids,
                        const std::vector<std::string>& labels,
                        const std::vector<Point>& features);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace geoprior
