#include "refine/serialization.hpp"

#include <stdexcept>
#include <variant>

namespace refine {

using nlohmann::json;

json to_json(const Distribution& d) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Uniform>)
          return {{"kind", "uniform"}, {"params", {{"lo", k.lo}, {"hi", k.hi}}}};
        else if constexpr (std::is_same_v<K, Exponential>)
          return {{"kind", "exponential"}, {"params", {{"rate", k.rate}}}};
        else
          return {{"kind", "tser"}, {"params", {{"H", k.H}, {"b", k.b}}}};
      },
      d.kind());
}

Distribution distribution_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const json& p = j.at("params");
  if (kind == "uniform") return Distribution::uniform(p.at("lo").get<double>(), p.at("hi").get<double>());
  if (kind == "exponential") return Distribution::exponential(p.at("rate").get<double>());
  if (kind == "tser") return Distribution::tser(p.at("H").get<double>(), p.at("b").get<double>());
  throw std::invalid_argument("unknown distribution kind '" + kind + "'");
}

json to_json(const AuctionInstance& inst) {
  json advs = json::array();
  for (const auto& a : inst.advertisers) advs.push_back({{"v", a.value}, {"p", a.relevance}});
  return {{"slots", inst.slots.effects()}, {"advertisers", advs}, {"dist", to_json(inst.dist)}};
}

AuctionInstance instance_from_json(const json& j) {
  AuctionInstance inst{SlotProfile(j.at("slots").get<std::vector<double>>()), {},
                       distribution_from_json(j.at("dist"))};
  for (const auto& a : j.at("advertisers"))
    inst.advertisers.push_back({a.at("v").get<double>(), a.at("p").get<double>()});
  inst.validate();
  return inst;
}

json to_json(const PredictionScheme& s) {
  json parts = json::object();
  for (const auto& [id, rel] : s.parts()) parts[id] = rel;
  json members = json::array();
  for (const auto& [pair, part] : s.membership())
    members.push_back({{"query", pair.first}, {"advertiser", pair.second}, {"part", part}});
  return {{"parts", parts}, {"membership", members}};
}

PredictionScheme scheme_from_json(const json& j) {
  PredictionScheme s;
  for (const auto& [id, rel] : j.at("parts").items()) s.add_part(id, rel.get<double>());
  for (const auto& m : j.at("membership"))
    s.assign(m.at("query").get<std::string>(), m.at("advertiser").get<AdvertiserId>(),
             m.at("part").get<std::string>());
  return s;
}

json to_json(const RefinementStructure& rs) {
  json subparts = json::object();
  for (const auto& [cid, list] : rs.subparts) {
    json arr = json::array();
    for (const auto& sp : list) arr.push_back({{"id", sp.id}, {"prob", sp.prob}});
    subparts[cid] = arr;
  }
  json out = {{"coarse", to_json(rs.coarse)}, {"fine", to_json(rs.fine)}, {"subparts", subparts}};
  if (!rs.query_weights.empty()) out["query_weights"] = rs.query_weights;
  return out;
}

RefinementStructure refinement_from_json(const json& j) {
  RefinementStructure rs;
  rs.coarse = scheme_from_json(j.at("coarse"));
  rs.fine = scheme_from_json(j.at("fine"));
  for (const auto& [cid, list] : j.at("subparts").items())
    for (const auto& sp : list)
      rs.subparts[cid].push_back({sp.at("id").get<std::string>(), sp.at("prob").get<double>()});
  if (j.contains("query_weights"))
    rs.query_weights = j.at("query_weights").get<std::map<QueryId, double>>();
  return rs;
}

json to_json(const Assignment& asg) {
  json slots = json::array();
  for (const auto& s : asg.slot_of) slots.push_back(s ? json(*s) : json(nullptr));
  return {{"slot_of", slots}};
}

json to_json(const OutcomeMetrics& m) {
  return {{"alpha", m.alpha},
          {"welfare", m.welfare},
          {"virtual_surplus", m.virtual_surplus},
          {"payment_total", m.payment_total}};
}

json to_json(const AppendixDelta& d) {
  return {{"H", d.H},
          {"b", d.b},
          {"I1", d.I1},
          {"I2", d.I2},
          {"I3", d.I3},
          {"delta_closed", d.delta_closed},
          {"delta_quad", d.delta_quad},
          {"I1_quad", d.I1_quad},
          {"I2_quad", d.I2_quad},
          {"I3_quad", d.I3_quad},
          {"evaluations", d.evaluations}};
}

}  // namespace refine
