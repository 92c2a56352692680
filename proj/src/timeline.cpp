#include "ips/timeline.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ips/errors.hpp"
#include "ips/rng.hpp"
#include "ips/text.hpp"

namespace ips {

namespace {
constexpr std::uint64_t kTimelinePurpose = 0x74696d656c696e65ull;  // "timeline"
}

std::vector<Atom> sample_site_atoms(const Site& s, double T, double M,
                                    std::uint64_t seed, std::uint64_t stream) {
  Rng rng = Rng::keyed(seed, stream, kTimelinePurpose,
                       static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.c[0])),
                       static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.c[1])),
                       static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.c[2])),
                       static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.c[3])));
  std::vector<Atom> atoms;
  double t = 0;
  for (;;) {
    t += rng.exponential(M);
    if (t > T) break;
    Atom a;
    a.site = s;
    a.time = t;
    a.u = M * rng.u01();
    a.v = rng.u01();
    atoms.push_back(a);
  }
  return atoms;
}

Timeline Timeline::sample(const Box& box, double T, double M, std::uint64_t seed,
                          std::uint64_t stream, Extent extent) {
  if (!(T > 0)) throw std::invalid_argument("sample_timeline: need T > 0");
  if (!(M > 0)) throw std::invalid_argument("sample_timeline: need M > 0");
  Timeline tl;
  tl.box_ = box;
  tl.horizon_ = T;
  tl.rate_ = M;
  tl.seed_ = seed;
  tl.stream_ = stream;
  tl.extent_ = extent;
  tl.per_site_.resize(static_cast<std::size_t>(box.size()));
  for (std::int64_t i = 0; i < box.size(); ++i) {
    tl.per_site_[static_cast<std::size_t>(i)] =
        sample_site_atoms(box.site(i), T, M, seed, stream);
  }
  tl.rebuild_order();
  return tl;
}

Timeline Timeline::from_atoms(const Box& box, double T, double M, std::vector<Atom> atoms,
                              Extent extent) {
  if (T < 0) throw std::invalid_argument("from_atoms: need T >= 0");
  if (extent == Extent::lazy)
    throw std::invalid_argument("from_atoms: lazy extension needs a sampled timeline");
  Timeline tl;
  tl.box_ = box;
  tl.horizon_ = T;
  tl.rate_ = M;
  tl.extent_ = extent;
  tl.per_site_.resize(static_cast<std::size_t>(box.size()));
  for (const Atom& a : atoms) {
    if (!box.contains(a.site)) throw std::invalid_argument("from_atoms: atom outside box");
    if (!(a.time > 0) || a.time > T)
      throw std::invalid_argument("from_atoms: atom time outside (0, T]");
    tl.per_site_[static_cast<std::size_t>(box.index(a.site))].push_back(a);
  }
  for (auto& v : tl.per_site_) {
    std::stable_sort(v.begin(), v.end(),
                     [](const Atom& a, const Atom& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].time == v[i - 1].time)
        throw std::invalid_argument("from_atoms: duplicate (site, time)");
  }
  tl.rebuild_order();
  return tl;
}

void Timeline::rebuild_order() {
  order_.clear();
  for (std::int32_t s = 0; s < static_cast<std::int32_t>(per_site_.size()); ++s) {
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(per_site_[static_cast<std::size_t>(s)].size()); ++i) {
      order_.push_back({s, i});
    }
  }
  std::sort(order_.begin(), order_.end(), [this](const AtomKey& a, const AtomKey& b) {
    const double ta = atom(a).time, tb = atom(b).time;
    if (ta != tb) return ta < tb;
    if (a.site_idx != b.site_idx) return a.site_idx < b.site_idx;
    return a.atom_idx < b.atom_idx;
  });
}

const std::vector<Atom>& Timeline::atoms_at(const Site& s) const {
  if (box_.contains(s)) return per_site_[static_cast<std::size_t>(box_.index(s))];
  switch (extent_) {
    case Extent::truncated: {
      static const std::vector<Atom> kNone;
      return kNone;
    }
    case Extent::strict:
      throw config_error("timeline read outside the sampled box (strict extent)");
    case Extent::lazy: {
      auto it = outside_.find(s);
      if (it == outside_.end()) {
        it = outside_.emplace(s, sample_site_atoms(s, horizon_, rate_, seed_, stream_)).first;
      }
      return it->second;
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<Atom> Timeline::all_atoms_in_box() const {
  std::vector<Atom> out;
  out.reserve(order_.size());
  for (const AtomKey& k : order_) out.push_back(atom(k));
  return out;
}

Timeline Timeline::with_atom(const Atom& a) const {
  if (!box_.contains(a.site)) throw std::invalid_argument("with_atom: site outside box");
  if (!(a.time > 0) || a.time > horizon_)
    throw std::invalid_argument("with_atom: time outside (0, T]");
  Timeline tl = *this;
  auto& list = tl.per_site_[static_cast<std::size_t>(box_.index(a.site))];
  for (const Atom& b : list) {
    if (b.time == a.time)
      throw std::invalid_argument("with_atom: tie with existing atom at the same site and time");
  }
  list.push_back(a);
  std::stable_sort(list.begin(), list.end(),
                   [](const Atom& x, const Atom& y) { return x.time < y.time; });
  tl.rebuild_order();
  return tl;
}

void Timeline::dump(std::ostream& os) const {
  os << "ipstl 1\n";
  os << "d " << box_.d << " m " << box_.m << " T " << fmt_double(horizon_) << " M "
     << fmt_double(rate_) << " seed " << seed_ << " stream " << stream_ << " atoms "
     << order_.size() << "\n";
  for (const AtomKey& k : order_) {
    const Atom& a = atom(k);
    for (int i = 0; i < box_.d; ++i) os << a.site.c[i] << " ";
    os << fmt_double(a.time) << " " << fmt_double(a.u) << " " << fmt_double(a.v) << "\n";
  }
}

Timeline Timeline::load(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "ipstl" || version != 1) throw io_error("timeline load: bad header");
  std::string key, sT, sM;
  int d = 0, m = 0;
  std::uint64_t seed = 0, stream = 0;
  std::size_t count = 0;
  is >> key >> d >> key >> m >> key >> sT >> key >> sM >> key >> seed >> key >> stream >> key >>
      count;
  if (!is) throw io_error("timeline load: bad header fields");
  const double T = parse_double(sT);
  const double M = parse_double(sM);
  std::vector<Atom> atoms;
  atoms.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Atom a;
    for (int j = 0; j < d; ++j) is >> a.site.c[j];
    std::string st, su, sv;
    is >> st >> su >> sv;
    if (!is) throw io_error("timeline load: truncated record " + std::to_string(i));
    a.time = parse_double(st);
    a.u = parse_double(su);
    a.v = parse_double(sv);
    atoms.push_back(a);
  }
  Timeline tl = from_atoms(Box(d, m), T, M, std::move(atoms));
  tl.seed_ = seed;
  tl.stream_ = stream;
  return tl;
}

}  // namespace ips
