#pragma once

#include <string>
#include <vector>

namespace holoflow {

struct CheckItem {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::string witness;  // empty when the check passed cleanly
};

struct Report {
    std::vector<CheckItem> items;

    void add(std::string name, double residual, double tolerance, std::string witness = {}) {
        items.push_back(
            {std::move(name), residual, tolerance, residual <= tolerance, std::move(witness)});
    }

    int violations() const {
        int n = 0;
        for (const auto& it : items)
            if (!it.pass) ++n;
        return n;
    }

    bool pass() const { return violations() == 0; }
};

}  // namespace holoflow
