#include "sf/ir.hpp"

#include <sstream>

namespace sf {

IRNode make_loop(std::shared_ptr<Iteration> it) {
    IRNode n;
    n.loop = std::move(it);
    return n;
}

IRNode make_block(std::shared_ptr<AssignBlock> b) {
    IRNode n;
    n.block = std::move(b);
    return n;
}

namespace {

void indent(std::ostringstream& os, int depth) {
    for (int i = 0; i < depth; ++i) os << "  ";
}

void dump_nodes(std::ostringstream& os, const std::vector<IRNode>& nodes, int depth) {
    for (const IRNode& n : nodes) {
        if (n.loop) {
            const Iteration& it = *n.loop;
            indent(os, depth);
            os << "for " << it.dim.name << " ";
            if (it.runtime_bounds)
                os << "[runtime)";
            else
                os << "[" << it.lo << "," << it.hi << ")";
            if (it.kind == LoopKind::Time)
                os << (it.dir == Direction::Forward ? " forward" : " backward");
            if (it.parallel) os << " parallel";
            if (it.vector) os << " vector";
            if (it.block > 0) os << " block " << it.block;
            os << "\n";
            dump_nodes(os, it.body, depth + 1);
        } else if (n.block) {
            for (const auto& [name, e] : n.block->temps) {
                indent(os, depth);
                os << name << " := " << to_string(e) << "\n";
            }
            for (const Assignment& a : n.block->assigns) {
                indent(os, depth);
                os << to_string(a.lhs) << (a.accumulate ? " += " : " = ") << to_string(a.rhs)
                   << "\n";
            }
        }
    }
}

} // namespace

std::string Operator::dump() const {
    std::ostringstream os;
    os << "operator " << name << "\n";
    os << "  fields:";
    for (const auto& [n, f] : fields) os << " " << n;
    os << "\n  symbols:";
    for (const auto& s : symbols) os << " " << s;
    os << "\n";
    for (const auto& [n, e] : pre_temps) os << "  " << n << " := " << to_string(e) << "\n";
    if (!prologue.empty()) {
        os << "  prologue:\n";
        dump_nodes(os, prologue, 2);
    }
    dump_nodes(os, roots, 1);
    return os.str();
}

} // namespace sf
