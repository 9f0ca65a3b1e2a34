#include "dpgs/budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "dpgs/errors.hpp"

namespace dpgs {

namespace {
// Relative slack for comparing composed spends against the declared total;
// absorbs fp error from share arithmetic without hiding real overspends.
constexpr double kAuditSlack = 1e-9;
} // namespace

PrivacyBudget PrivacyBudget::non_private() {
    return {std::numeric_limits<double>::infinity(), 0.0};
}

bool PrivacyBudget::is_non_private() const { return std::isinf(epsilon); }

void PrivacyBudget::validate() const {
    if (std::isnan(epsilon) || epsilon <= 0.0)
        throw ContractError("PrivacyBudget: epsilon must be positive");
    if (!(delta >= 0.0 && delta < 1.0))
        throw ContractError("PrivacyBudget: delta must lie in [0, 1)");
}

std::vector<PrivacyBudget> split_budget(const PrivacyBudget& total,
                                        const std::vector<double>& weights) {
    total.validate();
    if (weights.empty()) throw ContractError("split_budget: weights must be nonempty");
    for (double w : weights) {
        if (!(w > 0.0) || std::isinf(w))
            throw ContractError("split_budget: weights must be positive and finite");
    }
    double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<PrivacyBudget> shares;
    shares.reserve(weights.size());
    for (double w : weights) {
        if (total.is_non_private()) {
            shares.push_back(PrivacyBudget::non_private());
        } else {
            shares.push_back({total.epsilon * (w / sum), total.delta * (w / sum)});
        }
    }
    return shares;
}

BudgetLedger::BudgetLedger(PrivacyBudget total) : total_(total) { total_.validate(); }

void BudgetLedger::record(std::string subroutine, PrivacyBudget spent, Composition kind,
                          std::string partition) {
    spent.validate();
    if (kind == Composition::parallel && partition.empty())
        throw ContractError("BudgetLedger: parallel entries need a partition tag");
    entries_.push_back({std::move(subroutine), spent, kind, std::move(partition)});
}

PrivacyBudget BudgetLedger::composed() const {
    PrivacyBudget out{0.0, 0.0};
    std::map<std::string, PrivacyBudget> groups;
    for (const auto& e : entries_) {
        if (e.kind == Composition::sequential) {
            out.epsilon += e.spent.epsilon;
            out.delta += e.spent.delta;
        } else {
            auto& g = groups[e.partition];
            g.epsilon = std::max(g.epsilon, e.spent.epsilon);
            g.delta = std::max(g.delta, e.spent.delta);
        }
    }
    for (const auto& [tag, g] : groups) {
        out.epsilon += g.epsilon;
        out.delta += g.delta;
    }
    return out;
}

void BudgetLedger::verify() const {
    if (total_.is_non_private()) return;
    PrivacyBudget c = composed();
    double eps_cap = total_.epsilon * (1.0 + kAuditSlack);
    double delta_cap = total_.delta * (1.0 + kAuditSlack) + 1e-18;
    if (c.epsilon <= eps_cap && c.delta <= delta_cap) return;

    std::ostringstream msg;
    msg << "ledger audit failure: composed (" << c.epsilon << ", " << c.delta
        << ") exceeds declared (" << total_.epsilon << ", " << total_.delta << "); entries:";
    for (const auto& e : entries_) {
        msg << " [" << e.subroutine << " eps=" << e.spent.epsilon << " delta=" << e.spent.delta
            << (e.kind == Composition::parallel ? " parallel:" + e.partition : "") << "]";
    }
    throw AuditError(msg.str());
}

std::string BudgetLedger::format() const {
    std::ostringstream out;
    out << "privacy ledger (declared epsilon=" << total_.epsilon << " delta=" << total_.delta
        << ")\n";
    for (const auto& e : entries_) {
        out << "  " << e.subroutine << ": epsilon=" << e.spent.epsilon
            << " delta=" << e.spent.delta
            << (e.kind == Composition::parallel ? " [parallel over " + e.partition + "]" : "")
            << "\n";
    }
    PrivacyBudget c = composed();
    out << "  composed: epsilon=" << c.epsilon << " delta=" << c.delta << "\n";
    return out.str();
}

PrivacyBudget ledger_audit(const BudgetLedger& ledger) {
    ledger.verify();
    return ledger.composed();
}

} // namespace dpgs
