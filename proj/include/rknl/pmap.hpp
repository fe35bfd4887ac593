#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace rknl {

// Persistent weight-balanced search tree (Adams-style). Insertion copies
// only the search path, so extending an environment leaves every older
// version intact and shares the rest of the spine.
template <class K, class V, class Less = std::less<K>>
class PMap {
    struct Node;
    using Ptr = std::shared_ptr<const Node>;

    struct Node {
        K key;
        V val;
        Ptr left;
        Ptr right;
        std::size_t count;
    };

    Ptr root_;

    explicit PMap(Ptr r) : root_(std::move(r)) {}

    static std::size_t count_of(const Ptr& n) { return n ? n->count : 0; }

    static Ptr make(K k, V v, Ptr l, Ptr r) {
        std::size_t c = 1 + count_of(l) + count_of(r);
        return std::make_shared<const Node>(Node{std::move(k), std::move(v), std::move(l), std::move(r), c});
    }

    static Ptr balance(const K& k, const V& v, Ptr l, Ptr r) {
        std::size_t ln = count_of(l), rn = count_of(r);
        if (ln + rn <= 1) return make(k, v, std::move(l), std::move(r));
        if (rn > 3 * ln) {
            if (count_of(r->left) < 2 * count_of(r->right)) {
                return make(r->key, r->val, make(k, v, std::move(l), r->left), r->right);
            }
            Ptr rl = r->left;
            return make(rl->key, rl->val,
                        make(k, v, std::move(l), rl->left),
                        make(r->key, r->val, rl->right, r->right));
        }
        if (ln > 3 * rn) {
            if (count_of(l->right) < 2 * count_of(l->left)) {
                return make(l->key, l->val, l->left, make(k, v, l->right, std::move(r)));
            }
            Ptr lr = l->right;
            return make(lr->key, lr->val,
                        make(l->key, l->val, l->left, lr->left),
                        make(k, v, lr->right, std::move(r)));
        }
        return make(k, v, std::move(l), std::move(r));
    }

    static Ptr insert_at(const Ptr& n, const K& k, const V& v) {
        if (!n) return make(k, v, nullptr, nullptr);
        Less lt;
        if (lt(k, n->key)) return balance(n->key, n->val, insert_at(n->left, k, v), n->right);
        if (lt(n->key, k)) return balance(n->key, n->val, n->left, insert_at(n->right, k, v));
        return make(k, v, n->left, n->right);
    }

    template <class F>
    static void visit(const Node* n, F& f) {
        if (!n) return;
        visit(n->left.get(), f);
        f(n->key, n->val);
        visit(n->right.get(), f);
    }

public:
    PMap() = default;

    PMap insert(const K& k, const V& v) const { return PMap(insert_at(root_, k, v)); }

    const V* find(const K& k) const {
        const Node* n = root_.get();
        Less lt;
        while (n) {
            if (lt(k, n->key)) n = n->left.get();
            else if (lt(n->key, k)) n = n->right.get();
            else return &n->val;
        }
        return nullptr;
    }

    bool contains(const K& k) const { return find(k) != nullptr; }
    std::size_t size() const { return count_of(root_); }
    bool empty() const { return !root_; }
    bool same_root(const PMap& other) const { return root_ == other.root_; }

    // In-order traversal, so iteration order is deterministic.
    template <class F>
    void for_each(F&& f) const {
        visit(root_.get(), f);
    }

    friend bool operator==(const PMap& a, const PMap& b) {
        if (a.root_ == b.root_) return true;
        if (a.size() != b.size()) return false;
        bool eq = true;
        std::vector<std::pair<const K*, const V*>> xs;
        xs.reserve(a.size());
        a.for_each([&](const K& k, const V& v) { xs.emplace_back(&k, &v); });
        std::size_t i = 0;
        b.for_each([&](const K& k, const V& v) {
            if (!(*xs[i].first == k) || !(*xs[i].second == v)) eq = false;
            ++i;
        });
        return eq;
    }
};

}  // namespace rknl
