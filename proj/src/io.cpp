#include "geoprior/io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "geoprior/text.hpp"

namespace geoprior {

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

}  // namespace

// ============================================================================
// Observations
// ============================================================================

static const std::vector<std::string> kObservationHeader = {
    "obs_id", "latitude", "longitude", "date", "label_l1", "label_l2", "label_l3"};

RawDataset read_observations_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::CorruptFile, "'" + path + "' is empty");
    }
    if (split_csv_line(line) != kObservationHeader) {
        throw Error(ErrorKind::HeaderMismatch,
                    "'" + path + "' does not start with the observation header");
    }
    RawDataset raw;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != kObservationHeader.size()) {
            throw Error(ErrorKind::CorruptFile, path + ":" + std::to_string(line_no) + ": expected " +
                                                    std::to_string(kObservationHeader.size()) +
                                                    " fields, got " + std::to_string(fields.size()));
        }
        RawRow row;
        row.obs_id = fields[0];
        row.latitude = fields[1];
        row.longitude = fields[2];
        row.date = fields[3];
        row.label_l1 = fields[4];
        row.label_l2 = fields[5];
        row.label_l3 = fields[6];
        row.line = line_no;
        raw.rows.push_back(std::move(row));
    }
    return raw;
}

void write_observations_csv(const std::string& path, const Dataset& dataset) {
    std::ofstream out = open_output(path);
    out << join_csv(kObservationHeader) << "\n";
    for (const RawRow& row : to_raw(dataset).rows) {
        out << join_csv({row.obs_id, row.latitude, row.longitude, row.date, row.label_l1,
                         row.label_l2, row.label_l3})
            << "\n";
    }
    finish_output(out, path);
}

// ============================================================================
// Probability matrices
// ============================================================================

ProbMatrix read_prob_matrix(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::CorruptFile, "'" + path + "' is empty");
    }
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "obs_id") {
        throw Error(ErrorKind::HeaderMismatch,
                    "'" + path + "' header must be obs_id followed by class labels");
    }

    ProbMatrix matrix;
    matrix.labels.assign(header.begin() + 1, header.end());
    std::set<std::string> unique_labels(matrix.labels.begin(), matrix.labels.end());
    if (unique_labels.size() != matrix.labels.size()) {
        throw Error(ErrorKind::HeaderMismatch, "'" + path + "' repeats a class label");
    }
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        const std::string where = path + ":" + std::to_string(line_no);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::CorruptFile,
                        where + ": expected " + std::to_string(header.size()) + " fields");
        }
        if (!seen.insert(fields[0]).second) {
            throw Error(ErrorKind::DuplicateId, where + ": duplicate obs_id '" + fields[0] + "'");
        }
        ProbVector row(matrix.labels.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            row[i] = parse_double(fields[i + 1], where);
            if (!std::isfinite(row[i]) || row[i] < 0.0) {
                throw Error(ErrorKind::CorruptFile, where + ": probabilities must be finite and >= 0");
            }
            sum += row[i];
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw Error(ErrorKind::CorruptFile,
                        where + ": row sums to " + format_double(sum) + ", outside 1 +/- 1e-6");
        }
        for (double& v : row) v /= sum;
        matrix.obs_ids.push_back(fields[0]);
        matrix.rows.push_back(std::move(row));
    }
    return matrix;
}

void write_prob_matrix(const std::string& path, const ProbMatrix& matrix) {
    std::ofstream out = open_output(path);
    std::vector<std::string> header;
    header.reserve(matrix.labels.size() + 1);
    header.push_back("obs_id");
    header.insert(header.end(), matrix.labels.begin(), matrix.labels.end());
    out << join_csv(header) << "\n";
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << matrix.obs_ids[i];
        for (double v : matrix.rows[i]) out << ',' << format_double(v);
        out << "\n";
    }
    finish_output(out, path);
}

// ============================================================================
// Weights, history, plans, features
// ============================================================================

void write_weights_csv(const std::string& path, const std::vector<std::string>& labels,
                       const std::vector<double>& weights) {
    if (labels.size() != weights.size()) {
        throw Error(ErrorKind::LengthMismatch, "labels and weights differ in length");
    }
    std::ofstream out = open_output(path);
    out << "label,weight\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << join_csv({labels[i], format_double(weights[i])}) << "\n";
    }
    finish_output(out, path);
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
    std::ofstream out = open_output(path);
    out << "epoch,learning_rate,train_loss,train_top1,val_top1_micro,val_top1_macro\n";
    for (const EpochStats& row : history) {
        out << row.epoch << ',' << format_double(row.learning_rate) << ','
            << format_double(row.train_loss) << ',' << format_double(row.train_top1) << ','
            << (row.val_top1_micro ? format_double(*row.val_top1_micro) : "") << ','
            << (row.val_top1_macro ? format_double(*row.val_top1_macro) : "") << "\n";
    }
    finish_output(out, path);
}

void write_plan_csv(const std::string& path, const ResamplePlan& plan,
                    const std::vector<std::string>& class_labels,
                    const std::vector<std::vector<std::string>>& source_ids_by_class) {
    std::ofstream out = open_output(path);
    const char* kind = nullptr;
    switch (plan.kind) {
        case ResamplePlan::Kind::Weights: kind = "weights"; break;
        case ResamplePlan::Kind::Oversample: kind = "oversample"; break;
        case ResamplePlan::Kind::Undersample: kind = "undersample"; break;
        case ResamplePlan::Kind::Smote: kind = "smote"; break;
        case ResamplePlan::Kind::Cluster: kind = "cluster"; break;
    }
    out << "kind,label,cluster,source,duplicate,synthetic\n";
    if (plan.kind == ResamplePlan::Kind::Weights) {
        for (std::size_t c = 0; c < plan.weights.size(); ++c) {
            out << join_csv({kind, class_labels[c], "", "", "", format_double(plan.weights[c])})
                << "\n";
        }
    } else {
        for (const ResamplePlan::Entry& entry : plan.entries) {
            std::string source;
            if (entry.source_index >= 0) {
                source = source_ids_by_class[entry.class_index][entry.source_index];
            }
            std::string synthetic;
            for (std::size_t d = 0; d < entry.synthetic.size(); ++d) {
                if (d) synthetic += ';';
                synthetic += format_double(entry.synthetic[d]);
            }
            out << join_csv({kind, class_labels[entry.class_index],
                             entry.cluster >= 0 ? std::to_string(entry.cluster) : "", source,
                             entry.duplicate ? "1" : "0", synthetic})
                << "\n";
        }
    }
    for (const std::string& note : plan.notes) out << "# " << note << "\n";
    finish_output(out, path);
}

void write_features_csv(const std::string& path, const std::vector<std::string>& ids,
                        const std::vector<std::string>& labels,
                        const std::vector<Point>& features) {
    if (ids.size() != labels.size() || ids.size() != features.size()) {
        throw Error(ErrorKind::LengthMismatch, "feature table columns differ in length");
    }
    std::ofstream out = open_output(path);
    out << "obs_id,label_l3,f0,f1,f2,f3,f4,f5\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << join_csv({ids[i], labels[i]});
        for (double v : features[i]) out << ',' << format_double(v);
        out << "\n";
    }
    finish_output(out, path);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out = open_output(path);
    out << content;
    finish_output(out, path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

}  // namespace geoprior
