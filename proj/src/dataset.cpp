#include "medaudit/dataset.hpp"

#include "medaudit/cells.hpp"
#include "medaudit/csv.hpp"
#include "medaudit/error.hpp"
#include "medaudit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace medaudit {

const char* to_string(ColumnRole role) {
    switch (role) {
        case ColumnRole::covariate: return "covariate";
        case ColumnRole::treatment: return "treatment";
        case ColumnRole::mediator: return "mediator";
        case ColumnRole::outcome: return "outcome";
    }
    return "unknown";
}

ColumnRole column_role_from_string(const std::string& s) {
    if (s == "covariate") return ColumnRole::covariate;
    if (s == "treatment") return ColumnRole::treatment;
    if (s == "mediator") return ColumnRole::mediator;
    if (s == "outcome") return ColumnRole::outcome;
    throw Error(ErrorKind::SchemaMismatch, "unknown column role '" + s + "'");
}

AuditDataset::AuditDataset(Eigen::MatrixXd w, std::vector<int> a, Eigen::MatrixXd m, std::vector<int> y,
                           std::vector<std::string> w_names, std::vector<std::string> m_names,
                           std::array<std::string, 2> group_labels, std::string treatment_name,
                           std::string outcome_name)
    : w_(std::move(w)),
      a_(std::move(a)),
      m_(std::move(m)),
      y_(std::move(y)),
      w_names_(std::move(w_names)),
      m_names_(std::move(m_names)),
      group_labels_(std::move(group_labels)),
      treatment_name_(std::move(treatment_name)),
      outcome_name_(std::move(outcome_name)) {
    const auto n = static_cast<Eigen::Index>(a_.size());
    if (static_cast<Eigen::Index>(y_.size()) != n || w_.rows() != n || m_.rows() != n)
        throw Error(ErrorKind::InvalidArgument, "dataset columns are not row-aligned");
    if (static_cast<Eigen::Index>(w_names_.size()) != w_.cols() ||
        static_cast<Eigen::Index>(m_names_.size()) != m_.cols())
        throw Error(ErrorKind::InvalidArgument, "column name count does not match matrix width");
    for (std::size_t i = 0; i < a_.size(); ++i) {
        if ((a_[i] != 0 && a_[i] != 1) || (y_[i] != 0 && y_[i] != 1))
            throw Error(ErrorKind::InvalidArgument, "treatment and outcome must be binary");
    }
    if (!w_.allFinite() || !m_.allFinite())
        throw Error(ErrorKind::NonFiniteInput, "covariates and mediators must be finite");
    n_treated_ = static_cast<std::size_t>(std::count(a_.begin(), a_.end(), 1));
    if (n_treated_ == 0 || n_treated_ == a_.size())
        throw Error(ErrorKind::EmptyGroup, "both treatment arms must be non-empty");
    const auto positives = std::count(y_.begin(), y_.end(), 1);
    if (positives == 0 || positives == n)
        throw Error(ErrorKind::DegenerateOutcome, "outcome is constant");
}

AuditTable AuditDataset::to_table() const {
    AuditTable t;
    t.w = w_;
    t.m = m_;
    t.a.resize(static_cast<Eigen::Index>(n()));
    t.y.resize(static_cast<Eigen::Index>(n()));
    for (std::size_t i = 0; i < n(); ++i) {
        t.a(static_cast<Eigen::Index>(i)) = a_[i];
        t.y(static_cast<Eigen::Index>(i)) = y_[i];
    }
    t.w_names = w_names_;
    t.m_names = m_names_;
    t.group_labels = group_labels_;
    t.treatment_name = treatment_name_;
    t.outcome_name = outcome_name_;
    return t;
}

std::size_t ValidationReport::total_dropped() const {
    std::size_t total = 0;
    for (const auto& [reason, count] : dropped) total += count;
    return total;
}

std::size_t ValidationReport::dropped_for(const std::string& reason) const {
    for (const auto& [r, count] : dropped)
        if (r == reason) return count;
    return 0;
}

namespace {

constexpr const char* kReasons[] = {"missing covariate", "missing treatment", "missing mediator",
                                    "missing outcome",   "non-binary treatment", "non-binary outcome"};

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

}  // namespace

ValidationResult validate(const AuditTable& table) {
    const Eigen::Index n = table.rows();
    if (table.y.size() != n || table.w.rows() != n || table.m.rows() != n)
        throw Error(ErrorKind::InvalidArgument, "table columns are not row-aligned");

    std::array<std::size_t, std::size(kReasons)> counts{};
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        int reason = -1;
        if (!table.w.row(i).allFinite()) reason = 0;
        else if (std::isnan(table.a(i))) reason = 1;
        else if (!table.m.row(i).allFinite()) reason = 2;
        else if (std::isnan(table.y(i))) reason = 3;
        else if (!is_binary(table.a(i))) reason = 4;
        else if (!is_binary(table.y(i))) reason = 5;
        if (reason >= 0) ++counts[static_cast<std::size_t>(reason)];
        else keep.push_back(i);
    }

    const auto kept = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd w(kept, table.w.cols());
    Eigen::MatrixXd m(kept, table.m.cols());
    std::vector<int> a(keep.size());
    std::vector<int> y(keep.size());
    for (Eigen::Index r = 0; r < kept; ++r) {
        const Eigen::Index i = keep[static_cast<std::size_t>(r)];
        w.row(r) = table.w.row(i);
        m.row(r) = table.m.row(i);
        a[static_cast<std::size_t>(r)] = static_cast<int>(table.a(i));
        y[static_cast<std::size_t>(r)] = static_cast<int>(table.y(i));
    }

    ValidationReport report;
    report.n_input = static_cast<std::size_t>(n);
    report.n_kept = keep.size();
    for (std::size_t r = 0; r < std::size(kReasons); ++r) report.dropped.emplace_back(kReasons[r], counts[r]);

    AuditDataset dataset(std::move(w), std::move(a), std::move(m), std::move(y), table.w_names, table.m_names,
                         table.group_labels, table.treatment_name, table.outcome_name);
    report.positivity = positivity_screen(dataset);
    return {std::move(dataset), std::move(report)};
}

PositivityScreen positivity_screen(const AuditDataset& dataset, int bins_per_column) {
    PositivityScreen screen;
    if (dataset.q() == 0) {
        const double p = static_cast<double>(dataset.n_treated()) / static_cast<double>(dataset.n());
        screen.cells = 1;
        screen.min_propensity = screen.max_propensity = p;
        return screen;
    }
    const QuantileGrid grid(dataset.w(), bins_per_column);
    std::map<std::uint64_t, std::pair<std::size_t, std::size_t>> cells;  // key -> (units, treated)
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        auto& c = cells[grid.key_of(dataset.w(), static_cast<Eigen::Index>(i))];
        ++c.first;
        c.second += static_cast<std::size_t>(dataset.a()[i]);
    }
    screen.cells = cells.size();
    screen.min_propensity = 1.0;
    screen.max_propensity = 0.0;
    for (const auto& [key, c] : cells) {
        const double p = static_cast<double>(c.second) / static_cast<double>(c.first);
        screen.min_propensity = std::min(screen.min_propensity, p);
        screen.max_propensity = std::max(screen.max_propensity, p);
        if (c.second == 0 || c.second == c.first) ++screen.single_arm_cells;
    }
    return screen;
}

std::vector<std::size_t> FoldAssignment::members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) out.push_back(i);
    return out;
}

FoldAssignment assign_folds(const AuditDataset& dataset, int k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be at least 2");
    const std::size_t n = dataset.n();
    if (n < 2 * static_cast<std::size_t>(k))
        throw Error(ErrorKind::TooFewUnits, "need n >= 2k units (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");

    // Stratum order (0,0) (0,1) (1,1) (1,0): the a=1 strata are adjacent and
    // the y=1 strata are adjacent, so each of those groups occupies one
    // contiguous stretch of the round-robin deal.
    constexpr std::array<std::pair<int, int>, 4> order{{{0, 0}, {0, 1}, {1, 1}, {1, 0}}};
    std::array<std::vector<std::size_t>, 4> strata;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < order.size(); ++s) {
            if (dataset.a()[i] == order[s].first && dataset.y()[i] == order[s].second) {
                strata[s].push_back(i);
                break;
            }
        }
    }

    FoldAssignment folds;
    folds.k = k;
    folds.seed = seed;
    folds.fold_of.assign(n, 0);
    std::size_t position = 0;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        auto& units = strata[s];
        Rng rng = Rng::stream(seed, s);
        for (std::size_t i = units.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.index(i));
            std::swap(units[i - 1], units[j]);
        }
        for (const std::size_t unit : units) {
            folds.fold_of[unit] = static_cast<int>(position % static_cast<std::size_t>(k)) + 1;
            ++position;
        }
    }
    return folds;
}

Schema read_schema(const Json& j) {
    Schema schema;
    if (!j.contains("roles") || !j.at("roles").is_object())
        throw Error(ErrorKind::SchemaMismatch, "schema needs a 'roles' object");
    for (const auto& [name, role] : j.at("roles").items())
        schema.roles.emplace_back(name, column_role_from_string(role.get<std::string>()));
    if (j.contains("group_labels")) {
        const auto labels = j.at("group_labels").get<std::vector<std::string>>();
        if (labels.size() != 2) throw Error(ErrorKind::SchemaMismatch, "group_labels needs two entries");
        schema.group_labels = {labels[0], labels[1]};
    }
    return schema;
}

Json to_json(const Schema& schema) {
    Json roles = Json::object();
    for (const auto& [name, role] : schema.roles) roles[name] = to_string(role);
    Json j;
    j["roles"] = roles;
    j["group_labels"] = {schema.group_labels[0], schema.group_labels[1]};
    return j;
}

Schema schema_of(const AuditDataset& dataset) {
    Schema schema;
    for (const auto& name : dataset.w_names()) schema.roles.emplace_back(name, ColumnRole::covariate);
    schema.roles.emplace_back(dataset.treatment_name(), ColumnRole::treatment);
    for (const auto& name : dataset.m_names()) schema.roles.emplace_back(name, ColumnRole::mediator);
    schema.roles.emplace_back(dataset.outcome_name(), ColumnRole::outcome);
    schema.group_labels = dataset.group_labels();
    return schema;
}

AuditTable read_table(std::istream& in, const Schema& schema) {
    csv::Reader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw Error(ErrorKind::SchemaMismatch, "CSV has no header row");
    for (auto& h : header) h = std::string(csv::trim(h));

    std::map<std::string, ColumnRole> role_of(schema.roles.begin(), schema.roles.end());
    std::vector<std::size_t> w_cols, m_cols;
    std::size_t a_col = 0, y_col = 0, a_count = 0, y_count = 0;
    AuditTable table;
    table.group_labels = schema.group_labels;
    for (std::size_t c = 0; c < header.size(); ++c) {
        auto it = role_of.find(header[c]);
        if (it == role_of.end()) continue;
        switch (it->second) {
            case ColumnRole::covariate: w_cols.push_back(c); table.w_names.push_back(header[c]); break;
            case ColumnRole::mediator: m_cols.push_back(c); table.m_names.push_back(header[c]); break;
            case ColumnRole::treatment: a_col = c; ++a_count; table.treatment_name = header[c]; break;
            case ColumnRole::outcome: y_col = c; ++y_count; table.outcome_name = header[c]; break;
        }
        role_of.erase(it);
    }
    if (!role_of.empty())
        throw Error(ErrorKind::SchemaMismatch, "schema column '" + role_of.begin()->first + "' not in CSV header");
    if (a_count != 1 || y_count != 1)
        throw Error(ErrorKind::SchemaMismatch, "schema needs exactly one treatment and one outcome column");

    const double nan = std::nan("");
    auto cell = [&](const std::vector<std::string>& row, std::size_t c) {
        if (c >= row.size()) return nan;
        return csv::parse_double(row[c]).value_or(nan);
    };
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() == 1 && csv::trim(fields[0]).empty()) continue;  // blank line
        rows.push_back(fields);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    table.w.resize(n, static_cast<Eigen::Index>(w_cols.size()));
    table.m.resize(n, static_cast<Eigen::Index>(m_cols.size()));
    table.a.resize(n);
    table.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < w_cols.size(); ++j) table.w(i, static_cast<Eigen::Index>(j)) = cell(row, w_cols[j]);
        for (std::size_t j = 0; j < m_cols.size(); ++j) table.m(i, static_cast<Eigen::Index>(j)) = cell(row, m_cols[j]);
        table.a(i) = cell(row, a_col);
        table.y(i) = cell(row, y_col);
    }
    return table;
}

void write_csv(std::ostream& out, const AuditDataset& dataset) {
    std::vector<std::string> fields;
    for (const auto& name : dataset.w_names()) fields.push_back(name);
    fields.push_back(dataset.treatment_name());
    for (const auto& name : dataset.m_names()) fields.push_back(name);
    fields.push_back(dataset.outcome_name());
    csv::write_record(out, fields);
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        fields.clear();
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < dataset.w().cols(); ++j) fields.push_back(csv::format_double(dataset.w()(r, j)));
        fields.push_back(std::to_string(dataset.a()[i]));
        for (Eigen::Index j = 0; j < dataset.m().cols(); ++j) fields.push_back(csv::format_double(dataset.m()(r, j)));
        fields.push_back(std::to_string(dataset.y()[i]));
        csv::write_record(out, fields);
    }
}

ValidationResult load_dataset(const std::string& csv_path, const std::string& schema_path) {
    std::ifstream schema_in(schema_path);
    if (!schema_in) throw Error(ErrorKind::Io, "cannot open schema " + schema_path);
    Json schema_json;
    try {
        schema_in >> schema_json;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("schema is not valid JSON: ") + e.what());
    }
    std::ifstream csv_in(csv_path);
    if (!csv_in) throw Error(ErrorKind::Io, "cannot open dataset " + csv_path);
    return validate(read_table(csv_in, read_schema(schema_json)));
}

void save_dataset(const AuditDataset& dataset, const std::string& csv_path, const std::string& schema_path) {
    std::ofstream csv_out(csv_path, std::ios::binary);
    if (!csv_out) throw Error(ErrorKind::Io, "cannot write " + csv_path);
    write_csv(csv_out, dataset);
    std::ofstream schema_out(schema_path, std::ios::binary);
    if (!schema_out) throw Error(ErrorKind::Io, "cannot write " + schema_path);
    schema_out << to_json(schema_of(dataset)).dump(2) << '\n';
}

Json to_json(const ValidationReport& report) {
    Json dropped = Json::object();
    for (const auto& [reason, count] : report.dropped) dropped[reason] = count;
    return {
        {"n_input", report.n_input},
        {"n_kept", report.n_kept},
        {"dropped", dropped},
        {"positivity",
         {{"cells", report.positivity.cells},
          {"single_arm_cells", report.positivity.single_arm_cells},
          {"min_propensity", report.positivity.min_propensity},
          {"max_propensity", report.positivity.max_propensity}}},
    };
}

}  // namespace medaudit
