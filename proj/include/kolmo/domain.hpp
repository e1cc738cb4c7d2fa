#pragma once

#include "kolmo/types.hpp"

#include <limits>
#include <vector>

namespace kolmo {

/// Axis-aligned box in space-time.
struct SpaceTimeBox {
    Vector xLo, xHi;
    double tLo = 0.0, tHi = 0.0;

    double volume() const {
        double v = tHi - tLo;
        for (int i = 0; i < xLo.size(); ++i) v *= (xHi(i) - xLo(i));
        return v;
    }
    bool contains(const GroupPoint& z) const {
        if (z.t < tLo || z.t > tHi) return false;
        for (int i = 0; i < xLo.size(); ++i)
            if (z.x(i) < xLo(i) || z.x(i) > xHi(i)) return false;
        return true;
    }
    bool containsInterior(const GroupPoint& z, double margin = 0.0) const {
        if (z.t <= tLo + margin || z.t >= tHi - margin) return false;
        for (int i = 0; i < xLo.size(); ++i)
            if (z.x(i) <= xLo(i) + margin || z.x(i) >= xHi(i) - margin) return false;
        return true;
    }
};

/// Finite union of space-time boxes used as a computational domain.
struct BoxUnion {
    std::vector<SpaceTimeBox> boxes;

    BoxUnion() = default;
    explicit BoxUnion(SpaceTimeBox b) { boxes.push_back(std::move(b)); }

    bool contains(const GroupPoint& z) const {
        for (const auto& b : boxes)
            if (b.contains(z)) return true;
        return false;
    }
    bool containsInterior(const GroupPoint& z, double margin = 0.0) const {
        for (const auto& b : boxes)
            if (b.containsInterior(z, margin)) return true;
        return false;
    }
    SpaceTimeBox boundingBox() const {
        if (boxes.empty()) throw InputError("BoxUnion: empty domain");
        SpaceTimeBox out = boxes.front();
        for (size_t k = 1; k < boxes.size(); ++k) {
            const auto& b = boxes[k];
            out.tLo = std::min(out.tLo, b.tLo);
            out.tHi = std::max(out.tHi, b.tHi);
            for (int i = 0; i < out.xLo.size(); ++i) {
                out.xLo(i) = std::min(out.xLo(i), b.xLo(i));
                out.xHi(i) = std::max(out.xHi(i), b.xHi(i));
            }
        }
        return out;
    }
};

/// The cube ]-L,L[^N x ]tLo,tHi[.
inline SpaceTimeBox centered_box(int n, double L, double tLo, double tHi) {
    SpaceTimeBox b;
    b.xLo = Vector::Constant(n, -L);
    b.xHi = Vector::Constant(n, L);
    b.tLo = tLo;
    b.tHi = tHi;
    return b;
}

}  // namespace kolmo
