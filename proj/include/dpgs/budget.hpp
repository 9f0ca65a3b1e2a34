#pragma once

#include <string>
#include <vector>

namespace dpgs {

// (epsilon, delta) differential-privacy budget. epsilon = +infinity is the
// non-private sentinel: mechanisms given it pass values through unnoised.
struct PrivacyBudget {
    double epsilon = 0.0;
    double delta = 0.0;

    static PrivacyBudget non_private();
    bool is_non_private() const;

    // Throws ContractError unless epsilon > 0 (the sentinel included) and
    // delta lies in [0, 1).
    void validate() const;
};

// Proportional split: share i receives total * w_i / sum(w). Weights must be
// positive and the list nonempty. A non-private total yields non-private
// shares.
std::vector<PrivacyBudget> split_budget(const PrivacyBudget& total,
                                        const std::vector<double>& weights);

enum class Composition { sequential, parallel };

struct LedgerEntry {
    std::string subroutine;
    PrivacyBudget spent;
    Composition kind = Composition::sequential;
    // Parallel entries carrying the same partition tag declare spends over
    // disjoint slices of the data and are charged once, at their maximum.
    std::string partition;
};

// Append-only record of privacy spends against a declared total. Composition
// is basic: sequential entries add up; each parallel partition contributes
// the maximum of its entries exactly once. The composed spend is invariant
// under entry order.
class BudgetLedger {
  public:
    explicit BudgetLedger(PrivacyBudget total);

    void record(std::string subroutine, PrivacyBudget spent,
                Composition kind = Composition::sequential, std::string partition = {});

    PrivacyBudget composed() const;

    // Throws AuditError naming the offending entries when the composed spend
    // exceeds the declared total beyond fp slack.
    void verify() const;

    const PrivacyBudget& total() const { return total_; }
    const std::vector<LedgerEntry>& entries() const { return entries_; }

    // Human-readable audit table: one line per entry plus the composed totals.
    std::string format() const;

  private:
    PrivacyBudget total_;
    std::vector<LedgerEntry> entries_;
};

// Composed spend with the over-budget check applied.
PrivacyBudget ledger_audit(const BudgetLedger& ledger);

} // namespace dpgs
