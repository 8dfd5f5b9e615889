#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "mipstab/cli_io.hpp"

namespace mipstab {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    if (ec != std::errc()) throw Error(ErrorCode::io, "failed to format a number");
    return std::string(buffer, ptr);
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

/// One CSV record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line, int line_number) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted)
        throw Error(ErrorCode::parse, "unterminated quote on line " + std::to_string(line_number));
    fields.push_back(field);
    return fields;
}

double parse_cell(const std::string& raw, int data_row, const std::string& column) {
    const std::string cell = trim(raw);
    const std::string site = "row " + std::to_string(data_row) + ", column " + column;
    if (cell.empty()) throw Error(ErrorCode::parse, "missing value at " + site);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw Error(ErrorCode::parse, "non-numeric value '" + cell + "' at " + site);
    if (!std::isfinite(value))
        throw Error(ErrorCode::parse, "non-finite value at " + site);
    return value;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

json ranking_to_json(const Ranking& ranking) {
    json names = json::array();
    for (const FeatureId& f : ranking.features()) names.push_back(f.name);
    return names;
}

Ranking ranking_from_json(const json& names, const std::vector<FeatureId>& features) {
    std::vector<FeatureId> ordered;
    for (const auto& name : names) {
        const auto it = std::find_if(features.begin(), features.end(), [&](const FeatureId& f) {
            return f.name == name.get<std::string>();
        });
        if (it == features.end())
            throw Error(ErrorCode::parse,
                        "ranking references unknown feature " + name.get<std::string>());
        ordered.push_back(*it);
    }
    return Ranking(std::move(ordered));
}

json explainer_to_json(const ExplainerSpec& spec) {
    return json{{"kind", to_string(spec.kind)},
                {"n_coalition_samples", spec.n_coalition_samples},
                {"n_permutation_repeats", spec.n_permutation_repeats},
                {"background_size", spec.background_size},
                {"seed", spec.seed}};
}

ExplainerSpec explainer_from_json(const json& j) {
    ExplainerSpec spec;
    if (j.contains("kind")) spec.kind = explainer_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("n_coalition_samples"))
        spec.n_coalition_samples = j.at("n_coalition_samples").get<int>();
    if (j.contains("n_permutation_repeats"))
        spec.n_permutation_repeats = j.at("n_permutation_repeats").get<int>();
    if (j.contains("background_size")) spec.background_size = j.at("background_size").get<int>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

json config_to_json(const RunConfig& config) {
    json grid = json::array();
    for (const auto& entry : config.grid) grid.push_back(entry);
    return json{{"data", config.data_path},
                {"target", config.target},
                {"model", to_string(config.model.family)},
                {"hyperparameters", config.model.hyperparameters},
                {"grid", grid},
                {"explainer", explainer_to_json(config.explainer)},
                {"test_fraction", config.test_fraction},
                {"folds", config.folds},
                {"seed", config.seed},
                {"seeded", config.seeded},
                {"threads", config.threads},
                {"out", config.out_path}};
}

RunConfig config_from_json(const json& j) {
    RunConfig config;
    if (j.contains("data")) config.data_path = j.at("data").get<std::string>();
    if (j.contains("target")) config.target = j.at("target").get<std::string>();
    if (j.contains("model"))
        config.model.family = model_family_from_string(j.at("model").get<std::string>());
    if (j.contains("hyperparameters"))
        config.model.hyperparameters = j.at("hyperparameters").get<std::map<std::string, double>>();
    if (j.contains("grid")) {
        for (const auto& entry : j.at("grid")) {
            config.grid.push_back(entry.get<std::map<std::string, double>>());
        }
    }
    if (j.contains("explainer")) config.explainer = explainer_from_json(j.at("explainer"));
    if (j.contains("test_fraction")) config.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("folds")) config.folds = j.at("folds").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("seeded")) config.seeded = j.at("seeded").get<bool>();
    if (j.contains("threads")) config.threads = j.at("threads").get<int>();
    if (j.contains("out")) config.out_path = j.at("out").get<std::string>();
    return config;
}

}  // namespace

void RunConfig::validate() const {
    if (data_path.empty()) throw Error(ErrorCode::usage, "missing --data");
    if (target.empty()) throw Error(ErrorCode::usage, "missing --target");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(ErrorCode::usage, "--test-fraction must be in (0, 1)");
    if (folds < 2) throw Error(ErrorCode::usage, "--folds must be >= 2");
    if (threads < 1) throw Error(ErrorCode::usage, "--threads must be >= 1");
}

Dataset load_csv(const std::string& path, const std::string& target_column) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty() || trim(lines[0]).empty())
        throw Error(ErrorCode::parse, path + " has no header row");

    const std::vector<std::string> header = split_csv_line(lines[0], 1);
    std::size_t target_index = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (trim(header[c]) == target_column) {
            target_index = c;
            break;
        }
    }
    if (target_index == header.size())
        throw Error(ErrorCode::parse, "target column " + target_column + " not found in header");
    if (header.size() < 2)
        throw Error(ErrorCode::parse, "need at least one feature column besides the target");

    Dataset data;
    int ordinal = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == target_index) continue;
        data.feature_names.push_back({trim(header[c]), ordinal++});
    }

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        if (trim(lines[l]).empty()) continue;
        const int data_row = static_cast<int>(rows.size()) + 1;
        const std::vector<std::string> cells = split_csv_line(lines[l], static_cast<int>(l) + 1);
        if (cells.size() != header.size())
            throw Error(ErrorCode::parse, "row " + std::to_string(data_row) + " has " +
                                              std::to_string(cells.size()) + " cells, expected " +
                                              std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(header.size() - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == target_index) {
                const std::string label = trim(cells[c]);
                if (label.empty())
                    throw Error(ErrorCode::parse, "missing value at row " +
                                                      std::to_string(data_row) + ", column " +
                                                      target_column);
                raw_labels.push_back(label);
            } else {
                row.push_back(parse_cell(cells[c], data_row, trim(header[c])));
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw Error(ErrorCode::size, path + " needs at least 2 data rows");

    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    if (distinct.size() > 2)
        throw Error(ErrorCode::label, "target column " + target_column + " has " +
                                          std::to_string(distinct.size()) +
                                          " distinct values, expected 2");
    if (distinct.size() < 2)
        throw Error(ErrorCode::label,
                    "target column " + target_column + " has a single distinct value");
    const std::string& zero_label = *distinct.begin();

    data.X.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(data.feature_names.size()));
    data.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
        data.y[static_cast<Eigen::Index>(i)] = raw_labels[i] == zero_label ? 0 : 1;
    }
    data.validate();
    return data;
}

void write_csv(const Dataset& data, const std::string& target_column, const std::string& path) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path);
    for (const FeatureId& f : data.feature_names) out << f.name << ",";
    out << target_column << "\n";
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        for (Eigen::Index j = 0; j < data.n_features(); ++j) {
            out << format_double(data.X(i, j)) << ",";
        }
        out << data.y[i] << "\n";
    }
    if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

EliminationTrace read_trace(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    EliminationTrace trace;
    std::vector<FeatureId> canonical;
    for (std::size_t l = 0; l < lines.size(); ++l) {
        if (trim(lines[l]).empty()) continue;
        std::vector<std::string> names;
        for (const std::string& part : split_csv_line(lines[l], static_cast<int>(l) + 1)) {
            names.push_back(trim(part));
        }
        std::vector<FeatureId> ordered;
        if (canonical.empty()) {
            for (const std::string& name : names) {
                if (name.empty())
                    throw Error(ErrorCode::parse,
                                "empty feature name on line " + std::to_string(l + 1));
                canonical.push_back({name, static_cast<int>(canonical.size())});
                ordered.push_back(canonical.back());
            }
        } else {
            for (const std::string& name : names) {
                const auto it = std::find_if(canonical.begin(), canonical.end(),
                                             [&](const FeatureId& f) { return f.name == name; });
                if (it == canonical.end())
                    throw Error(ErrorCode::parse, "line " + std::to_string(l + 1) +
                                                      " names unknown feature " + name);
                ordered.push_back(*it);
            }
        }
        trace.rankings.emplace_back(std::move(ordered));
    }
    if (trace.rankings.empty()) throw Error(ErrorCode::parse, path + " contains no rankings");
    for (std::size_t k = 0; k + 1 < trace.rankings.size(); ++k) {
        trace.removed.push_back(trace.rankings[k].head());
    }
    trace.validate();
    return trace;
}

void write_trace(const EliminationTrace& trace, const std::string& path) {
    trace.validate();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path);
    for (const Ranking& ranking : trace.rankings) {
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            if (i > 0) out << ",";
            out << ranking.at_position(i + 1).name;
        }
        out << "\n";
    }
    if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

Ranking read_ranking_file(const std::string& path, const std::vector<FeatureId>* canonical) {
    const std::vector<std::string> lines = read_lines(path);
    std::vector<FeatureId> ordered;
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const std::string name = trim(lines[l]);
        if (name.empty()) continue;
        if (canonical == nullptr) {
            ordered.push_back({name, static_cast<int>(ordered.size())});
        } else {
            const auto it = std::find_if(canonical->begin(), canonical->end(),
                                         [&](const FeatureId& f) { return f.name == name; });
            if (it == canonical->end())
                throw Error(ErrorCode::structure_mismatch,
                            path + " names feature " + name + " absent from the reference file");
            ordered.push_back(*it);
        }
    }
    if (ordered.empty()) throw Error(ErrorCode::parse, path + " contains no feature names");
    return Ranking(std::move(ordered));
}

std::string report_to_string(const StabilityReport& report, const RunConfig& config) {
    json features = json::array();
    std::vector<FeatureId> by_ordinal = report.base_ranking.features();
    std::sort(by_ordinal.begin(), by_ordinal.end(),
              [](const FeatureId& a, const FeatureId& b) { return a.ordinal < b.ordinal; });
    for (const FeatureId& f : by_ordinal) {
        features.push_back(json{{"name", f.name}, {"ordinal", f.ordinal}});
    }

    json rankings = json::array();
    for (const Ranking& ranking : report.trace.rankings) rankings.push_back(ranking_to_json(ranking));
    json removed = json::array();
    for (const FeatureId& f : report.trace.removed) removed.push_back(f.name);

    json scores = json::object();
    for (const FeatureScore& entry : report.scores.entries) {
        json terms = json::array();
        for (const auto& [n, x] : entry.terms) terms.push_back(json::array({n, x}));
        scores[entry.feature.name] = json{{"mip", entry.mip}, {"terms", terms}};
    }

    json movements = json::array();
    for (const MovementRecord& record : report.movements) {
        movements.push_back(json{{"n_before", record.n_before},
                                 {"m", record.movement_m},
                                 {"mpm", record.mpm},
                                 {"rate", record.movement_rate}});
    }

    const json doc{
        {"tool", json{{"name", kToolName}, {"version", kToolVersion}}},
        {"config", config_to_json(config)},
        {"features", features},
        {"result",
         json{{"base_ranking", ranking_to_json(report.base_ranking)},
              {"trace", json{{"rankings", rankings},
                             {"removed", removed},
                             {"per_step_accuracy", report.trace.per_step_accuracy}}},
              {"scores", json{{"per_feature", scores},
                              {"sd", report.scores.sd},
                              {"mip_ranking", ranking_to_json(report.scores.mip_ranking)}}},
              {"movements", movements},
              {"nmr", report.nmr},
              {"sd", report.sd},
              {"tuned_hyperparameters", report.tuned_spec.hyperparameters},
              {"test_accuracy", report.test_accuracy}}}};
    return doc.dump(2) + "\n";
}

void write_report(const StabilityReport& report, const RunConfig& config,
                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path);
    out << report_to_string(report, config);
    if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

std::pair<StabilityReport, RunConfig> read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, path + ": " + e.what());
    }

    try {
        RunConfig config = config_from_json(doc.at("config"));
        std::vector<FeatureId> features;
        for (const auto& f : doc.at("features")) {
            features.push_back({f.at("name").get<std::string>(), f.at("ordinal").get<int>()});
        }

        const json& result = doc.at("result");
        StabilityReport report;
        report.base_ranking = ranking_from_json(result.at("base_ranking"), features);
        for (const auto& names : result.at("trace").at("rankings")) {
            report.trace.rankings.push_back(ranking_from_json(names, features));
        }
        for (const auto& name : result.at("trace").at("removed")) {
            const Ranking probe = ranking_from_json(json::array({name}), features);
            report.trace.removed.push_back(probe.head());
        }
        report.trace.per_step_accuracy =
            result.at("trace").at("per_step_accuracy").get<std::vector<double>>();

        for (const FeatureId& feature : features) {
            const json& entry = result.at("scores").at("per_feature").at(feature.name);
            FeatureScore score;
            score.feature = feature;
            score.mip = entry.at("mip").get<double>();
            for (const auto& term : entry.at("terms")) {
                score.terms.emplace_back(term.at(0).get<int>(), term.at(1).get<double>());
            }
            report.scores.entries.push_back(std::move(score));
        }
        report.scores.mip_ranking =
            ranking_from_json(result.at("scores").at("mip_ranking"), features);
        report.scores.sd = result.at("scores").at("sd").get<double>();

        for (const auto& m : result.at("movements")) {
            MovementRecord record;
            record.n_before = m.at("n_before").get<int>();
            record.movement_m = m.at("m").get<long>();
            record.mpm = m.at("mpm").get<long>();
            record.movement_rate = m.at("rate").get<double>();
            report.movements.push_back(record);
        }
        report.nmr = result.at("nmr").get<double>();
        report.sd = result.at("sd").get<double>();
        report.tuned_spec.family = config.model.family;
        report.tuned_spec.hyperparameters =
            result.at("tuned_hyperparameters").get<std::map<std::string, double>>();
        report.test_accuracy = result.at("test_accuracy").get<double>();
        return {std::move(report), std::move(config)};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, path + ": malformed report: " + e.what());
    }
}

void write_rankings_csv(const EliminationTrace& trace, const std::string& path) {
    trace.validate();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path);
    out << "n,position,feature\n";
    for (const Ranking& ranking : trace.rankings) {
        for (std::size_t i = 1; i <= ranking.size(); ++i) {
            out << ranking.size() << "," << i << "," << ranking.at_position(i).name << "\n";
        }
    }
    if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

void write_correlation_csv(const Eigen::MatrixXd& correlation,
                           const std::vector<FeatureId>& features, const std::string& path) {
    if (correlation.rows() != correlation.cols() ||
        correlation.rows() != static_cast<Eigen::Index>(features.size()))
        throw Error(ErrorCode::structure_mismatch, "correlation shape does not match features");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path);
    out << "feature";
    for (const FeatureId& f : features) out << "," << f.name;
    out << "\n";
    for (Eigen::Index i = 0; i < correlation.rows(); ++i) {
        out << features[static_cast<std::size_t>(i)].name;
        for (Eigen::Index j = 0; j < correlation.cols(); ++j) {
            out << ",";
            if (std::isnan(correlation(i, j))) {
                out << "nan";
            } else {
                out << format_double(correlation(i, j));
            }
        }
        out << "\n";
    }
    if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

}  // namespace mipstab
