#pragma once

#include <Eigen/Dense>
#include "medaudit/json.hpp"

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace medaudit {

enum class ColumnRole { covariate, treatment, mediator, outcome };

const char* to_string(ColumnRole role);
ColumnRole column_role_from_string(const std::string& s);

// Unvalidated table as ingested. Missing entries are NaN; treatment and
// outcome are kept as doubles so non-binary codes can be reported.
struct AuditTable {
    Eigen::MatrixXd w;
    Eigen::VectorXd a;
    Eigen::MatrixXd m;
    Eigen::VectorXd y;
    std::vector<std::string> w_names;
    std::vector<std::string> m_names;
    std::string treatment_name = "a";
    std::string outcome_name = "y";
    std::array<std::string, 2> group_labels{"reference", "comparison"};

    Eigen::Index rows() const { return a.size(); }
};

// Validated units O = (W, A, M, Y). Construction enforces every invariant:
// binary A and Y, no missing values, both groups present, aligned rows.
class AuditDataset {
public:
    AuditDataset(Eigen::MatrixXd w, std::vector<int> a, Eigen::MatrixXd m, std::vector<int> y,
                 std::vector<std::string> w_names, std::vector<std::string> m_names,
                 std::array<std::string, 2> group_labels = {"reference", "comparison"},
                 std::string treatment_name = "a", std::string outcome_name = "y");

    std::size_t n() const noexcept { return a_.size(); }
    std::size_t q() const noexcept { return static_cast<std::size_t>(w_.cols()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(m_.cols()); }

    const Eigen::MatrixXd& w() const noexcept { return w_; }
    const Eigen::MatrixXd& m() const noexcept { return m_; }
    const std::vector<int>& a() const noexcept { return a_; }
    const std::vector<int>& y() const noexcept { return y_; }
    const std::vector<std::string>& w_names() const noexcept { return w_names_; }
    const std::vector<std::string>& m_names() const noexcept { return m_names_; }
    const std::array<std::string, 2>& group_labels() const noexcept { return group_labels_; }
    const std::string& treatment_name() const noexcept { return treatment_name_; }
    const std::string& outcome_name() const noexcept { return outcome_name_; }

    std::size_t n_treated() const noexcept { return n_treated_; }

    AuditTable to_table() const;

private:
    Eigen::MatrixXd w_;
    std::vector<int> a_;
    Eigen::MatrixXd m_;
    std::vector<int> y_;
    std::vector<std::string> w_names_;
    std::vector<std::string> m_names_;
    std::array<std::string, 2> group_labels_;
    std::string treatment_name_;
    std::string outcome_name_;
    std::size_t n_treated_ = 0;
};

struct PositivityScreen {
    std::size_t cells = 0;             // occupied coarse W cells
    std::size_t single_arm_cells = 0;  // cells where one arm is absent
    double min_propensity = 0.0;       // min over cells of empirical P(A=1 | cell)
    double max_propensity = 0.0;
};

struct ValidationReport {
    std::size_t n_input = 0;
    std::size_t n_kept = 0;
    // Reason -> dropped rows, in a fixed reason order. Each row is charged to
    // the first failing check.
    std::vector<std::pair<std::string, std::size_t>> dropped;
    PositivityScreen positivity;

    std::size_t total_dropped() const;
    std::size_t dropped_for(const std::string& reason) const;
};

struct ValidationResult {
    AuditDataset dataset;
    ValidationReport report;
};

// Drops rows with missing fields or non-binary A/Y and checks group and
// outcome variation on the survivors. Throws EmptyGroup / DegenerateOutcome.
ValidationResult validate(const AuditTable& table);

PositivityScreen positivity_screen(const AuditDataset& dataset, int bins_per_column = 3);

struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> fold_of;  // fold id in [1, k] per unit

    std::vector<std::size_t> members(int fold) const;
    std::vector<std::size_t> complement(int fold) const;
};

// Stratified on the joint (a, y) cell; within a stratum the order is a seeded
// shuffle, and strata are dealt round-robin in one continuous sequence so that
// fold sizes, a=1 counts, and y=1 counts differ across folds by at most one.
FoldAssignment assign_folds(const AuditDataset& dataset, int k, std::uint64_t seed);

// CSV + sidecar schema.
struct Schema {
    std::vector<std::pair<std::string, ColumnRole>> roles;  // header order irrelevant
    std::array<std::string, 2> group_labels{"reference", "comparison"};
};

Schema read_schema(const Json& j);
Json to_json(const Schema& schema);
Schema schema_of(const AuditDataset& dataset);

// Columns keep CSV header order within each role. Columns not named by the
// schema are ignored. Throws SchemaMismatch when a schema column is absent or
// when there is not exactly one treatment and one outcome column.
AuditTable read_table(std::istream& csv, const Schema& schema);

void write_csv(std::ostream& out, const AuditDataset& dataset);

// Convenience: read CSV + schema files and validate.
ValidationResult load_dataset(const std::string& csv_path, const std::string& schema_path);
void save_dataset(const AuditDataset& dataset, const std::string& csv_path, const std::string& schema_path);

Json to_json(const ValidationReport& report);

}  // namespace medaudit
