#pragma once
// Deterministic synthetic corpus and claim set. The geography is fictional:
// people live in cities, cities sit in countries, countries sit on
// continents, and the person documents hyperlink to the city documents so
// multi-hop claims can only be fully resolved through link expansion.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factver/corpus.hpp"
#include "factver/types.hpp"

namespace testsupport {

struct World {
  factver::CorpusIndex index;
  std::vector<factver::ClaimRecord> claims;
  std::vector<int64_t> two_hop_ids;     // constructed multi-hop claims (groups of 2)
  std::vector<int64_t> single_plus_ids;
  std::vector<int64_t> multi_plus_ids;
  std::string dump_jsonl;   // ingest format, same content as `index`
  std::string claims_jsonl;
};

namespace worlddetail {

inline const std::vector<std::string>& continents() {
  static const std::vector<std::string> v = {"Northreach", "Sudoria", "Eastmark", "Westvale",
                                             "Centralia"};
  return v;
}

inline const std::vector<std::string>& countries() {
  static const std::vector<std::string> v = {
      "Avaria",   "Belmora",  "Cardona",  "Delvania", "Estria",  "Fontara", "Grenholm",
      "Halvora",  "Istrana",  "Jorvika",  "Kaldora",  "Lumeria", "Moravik", "Norvena",
      "Ostravia", "Pelmora",  "Quintara", "Rovenia",  "Selvora", "Tavrania"};
  return v;
}

inline const std::vector<std::string>& cities() {
  static const std::vector<std::string> v = {
      "Arlen",   "Bexley",  "Corvin",  "Dalsted", "Elmridge", "Farholt", "Gildan",  "Harwick",
      "Ivarra",  "Jasper",  "Kelmont", "Larkin",  "Marwick",  "Nolbury", "Ormond",  "Penrith",
      "Quorra",  "Ristow",  "Selbourn", "Talvik", "Umbren",   "Velmar",  "Wexford", "Yarrow",
      "Zelden",  "Ashvale", "Briarton", "Coldwater", "Dunmore", "Eastfall", "Fernley",
      "Graymoor", "Hollis",  "Ironwood", "Juniper", "Kestrel", "Lindenf", "Mosswood",
      "Nightvale", "Oakhurst"};
  return v;
}

inline const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v = {
      "Alice",  "Bruno",   "Clara",  "Dmitri", "Elena",  "Felix",  "Greta",  "Hugo",
      "Ingrid", "Jonas",   "Katya",  "Lazlo",  "Mireille", "Nikolai", "Odette", "Pavel",
      "Ramona", "Stellan", "Tilda",  "Ulrich", "Vera",   "Wendel", "Xenia",  "Yorick"};
  return v;
}

inline const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v = {"Anderov", "Bellweather", "Cormier", "Drexel",
                                             "Engstrom", "Falkner", "Grimaldi", "Hollander",
                                             "Imbrecht", "Joransen"};
  return v;
}

inline const std::vector<std::string>& professions() {
  static const std::vector<std::string> v = {"painter",   "violinist", "architect", "botanist",
                                             "historian", "sculptor",  "novelist",  "chemist",
                                             "cartographer", "glassblower", "astronomer",
                                             "beekeeper"};
  return v;
}

inline const std::vector<std::string>& currencies() {
  static const std::vector<std::string> v = {"crown", "florin", "mark", "thaler", "guilder"};
  return v;
}

struct Person {
  std::string name;
  int city = 0;        // index into cities()
  int profession = 0;  // index into professions()
  int birth_year = 0;
  bool summary_sentence = false;  // extra sentence restating city's country
};

inline std::vector<Person> people() {
  std::vector<Person> out;
  const auto& fn = first_names();
  const auto& ln = last_names();
  for (int i = 0; i < 230; ++i) {
    Person p;
    p.name = fn[i % fn.size()] + " " + ln[(i / fn.size()) % ln.size()];
    p.city = (i * 7 + 3) % 40;
    p.profession = i % 12;
    p.birth_year = 1900 + (i * 13) % 100;
    out.push_back(p);
  }
  return out;
}

inline int city_country(int city) { return city % 20; }
inline int country_continent(int country) { return country % 5; }

}  // namespace worlddetail

inline World build_world() {
  using namespace worlddetail;
  World w;

  auto add_doc = [&w](const std::string& id, const std::vector<std::string>& sentences,
                      const std::vector<std::vector<std::string>>& links) {
    factver::Document d;
    d.doc_id = id;
    d.sentences = sentences;
    d.links = links;
    w.index.documents.emplace(id, std::move(d));
  };

  for (size_t i = 0; i < continents().size(); ++i) {
    const std::string& name = continents()[i];
    add_doc(name,
            {name + " is one of the five continents.",
             name + " spans " + std::to_string(800 + 150 * i) + " thousand square miles."},
            {{}, {}});
  }
  for (size_t i = 0; i < countries().size(); ++i) {
    const std::string& name = countries()[i];
    const std::string& cont = continents()[country_continent(static_cast<int>(i))];
    const std::string& cur = currencies()[i % currencies().size()];
    add_doc(name,
            {name + " is a country in " + cont + ".",
             "The currency of " + name + " is the " + cur + "."},
            {{cont}, {}});
  }
  for (size_t i = 0; i < cities().size(); ++i) {
    const std::string& name = cities()[i];
    const std::string& country = countries()[city_country(static_cast<int>(i))];
    add_doc(name,
            {name + " is a city in " + country + ".",
             name + " has about " + std::to_string(40 + 11 * (i % 50)) + " thousand residents."},
            {{country}, {}});
  }
  std::vector<Person> folk = people();
  for (const Person& p : folk) {
    const std::string& city = cities()[p.city];
    std::vector<std::string> sentences = {
        p.name + " lives in " + city + ".",
        p.name + " is a " + professions()[p.profession] + ".",
        p.name + " was born in " + std::to_string(p.birth_year) + "."};
    std::vector<std::vector<std::string>> links = {{city}, {}, {}};
    w.index.documents.emplace(p.name, factver::Document{p.name, sentences, links});
  }
  add_doc("Mercury (band)", {"Mercury is a rock band formed in Bexley.",
                             "Mercury released four albums of chamber rock."},
          {{"Bexley"}, {}});
  add_doc("Mercury (element)", {"Mercury is a chemical element that is liquid at room "
                                "temperature.",
                                "Mercury is used in older thermometers."},
          {{}, {}});
  add_doc("The Silver Bridge", {"The Silver Bridge crosses the river at Harwick.",
                                "The Silver Bridge opened in 1931."},
          {{"Harwick"}, {}});
  add_doc("Solstice Festival", {"The Solstice Festival is held every year in Talvik.",
                                "The Solstice Festival lasts nine days."},
          {{"Talvik"}, {}});
  add_doc("Glass Harp", {"The glass harp is an instrument made of tuned glasses.",
                         "A glass harp player rubs the rims with wet fingers."},
          {{}, {}});

  // Claims. Disjoint person ranges keep the categories independent.
  int64_t next_id = 1000;
  int annotation = 50000;
  auto make_claim = [&next_id](const std::string& text) {
    factver::ClaimRecord c;
    c.claim_id = next_id++;
    c.text = text;
    c.has_label = true;
    return c;
  };

  // 60 single-sentence SUPPORTS: the profession sentence verbatim.
  for (int i = 0; i < 60; ++i) {
    const Person& p = folk[i];
    factver::ClaimRecord c = make_claim(p.name + " is a " + professions()[p.profession] + ".");
    c.label = factver::Label::Supports;
    c.evidence_groups = {{{p.name, 1}}};
    w.claims.push_back(std::move(c));
  }
  // 40 single-sentence REFUTES: wrong profession, same evidence.
  for (int i = 60; i < 100; ++i) {
    const Person& p = folk[i];
    const std::string& wrong = professions()[(p.profession + 5) % 12];
    factver::ClaimRecord c = make_claim(p.name + " is a " + wrong + ".");
    c.label = factver::Label::Refutes;
    c.evidence_groups = {{{p.name, 1}}};
    w.claims.push_back(std::move(c));
  }
  // 45 two-hop claims: the city name never appears in the claim, so the
  // second document is reachable only through the person document's link.
  for (int i = 100; i < 145; ++i) {
    const Person& p = folk[i];
    const std::string& city = cities()[p.city];
    int true_country = city_country(p.city);
    bool refute = (i - 100) >= 30;
    int claim_country = refute ? (true_country + 7) % 20 : true_country;
    factver::ClaimRecord c =
        make_claim(p.name + " lives in a city in " + countries()[claim_country] + ".");
    c.label = refute ? factver::Label::Refutes : factver::Label::Supports;
    c.evidence_groups = {{{p.name, 0}, {city, 0}}};
    w.two_hop_ids.push_back(c.claim_id);
    w.claims.push_back(std::move(c));
  }
  // 15 Single+ claims: provable by one summary sentence or by the two-hop
  // pair. The summary sentence is appended to the person document.
  for (int i = 145; i < 160; ++i) {
    Person& p = folk[i];
    p.summary_sentence = true;
    const std::string& city = cities()[p.city];
    const std::string& country = countries()[city_country(p.city)];
    factver::Document& doc = w.index.documents.at(p.name);
    doc.sentences.push_back(p.name + " resides in a city in " + country + ".");
    doc.links.push_back({});
    factver::ClaimRecord c = make_claim(p.name + " resides in a city in " + country + ".");
    c.label = factver::Label::Supports;
    c.evidence_groups = {{{p.name, 3}}, {{p.name, 0}, {city, 0}}};
    w.single_plus_ids.push_back(c.claim_id);
    w.claims.push_back(std::move(c));
  }
  // 10 Multi+ claims: a three-sentence chain through city and country.
  for (int i = 160; i < 170; ++i) {
    const Person& p = folk[i];
    const std::string& city = cities()[p.city];
    int country = city_country(p.city);
    const std::string& cont = continents()[country_continent(country)];
    factver::ClaimRecord c =
        make_claim(p.name + " lives in a city in a country in " + cont + ".");
    c.label = factver::Label::Supports;
    c.evidence_groups = {{{p.name, 0}, {city, 0}, {countries()[country], 0}}};
    w.multi_plus_ids.push_back(c.claim_id);
    w.claims.push_back(std::move(c));
  }
  // 45 NEI claims: statements the corpus neither confirms nor refutes.
  static const std::vector<std::string> unverifiable = {
      " owns a sailboat.",       " collects antique maps.", " speaks four languages.",
      " once climbed a volcano.", " keeps a parrot."};
  for (int i = 170; i < 215; ++i) {
    const Person& p = folk[i];
    factver::ClaimRecord c = make_claim(p.name + unverifiable[(i - 170) % 5]);
    c.label = factver::Label::NotEnoughInfo;
    w.claims.push_back(std::move(c));
  }

  // Keep group members in the same canonical order the claim loader uses.
  for (factver::ClaimRecord& c : w.claims)
    for (auto& group : c.evidence_groups) std::sort(group.begin(), group.end());

  w.index.finalize();

  // Serialized twins of the in-memory structures.
  {
    std::string out;
    for (const auto& [id, doc] : w.index.documents) {
      std::string lines;
      for (size_t s = 0; s < doc.sentences.size(); ++s) {
        if (s > 0) lines += "\n";
        lines += std::to_string(s) + "\t" + doc.sentences[s];
        for (const std::string& anchor : doc.links[s]) lines += "\t" + anchor;
      }
      nlohmann::json rec;
      rec["id"] = id;
      rec["lines"] = lines;
      out += rec.dump() + "\n";
    }
    w.dump_jsonl = std::move(out);
  }
  {
    std::string out;
    for (const factver::ClaimRecord& c : w.claims) {
      nlohmann::json rec;
      rec["id"] = c.claim_id;
      rec["claim"] = c.text;
      rec["label"] = factver::label_name(c.label);
      nlohmann::json groups = nlohmann::json::array();
      if (c.label == factver::Label::NotEnoughInfo) {
        // Half the NEI records carry the null-evidence shape real data uses.
        if (c.claim_id % 2 == 0) {
          groups.push_back(nlohmann::json::array(
              {nlohmann::json::array({annotation++, annotation++, nullptr, nullptr})}));
        }
      } else {
        for (const auto& group : c.evidence_groups) {
          nlohmann::json g = nlohmann::json::array();
          for (const factver::EvidenceRef& ref : group)
            g.push_back(nlohmann::json::array(
                {annotation++, annotation++, ref.doc_id, ref.sentence_index}));
          groups.push_back(std::move(g));
        }
      }
      rec["evidence"] = std::move(groups);
      out += rec.dump() + "\n";
    }
    w.claims_jsonl = std::move(out);
  }
  return w;
}

// Compact corpus for ranking comparisons: fifty documents over a small
// shared vocabulary so scores collide and tie-breaking matters.
struct TfidfFixture {
  std::map<std::string, std::string> doc_texts;  // id -> full text
  factver::CorpusIndex index;
  std::vector<std::string> queries;
};

inline TfidfFixture build_tfidf_fixture() {
  TfidfFixture f;
  static const std::vector<std::string> topics = {"river", "bridge", "castle", "harbor",
                                                  "market"};
  static const std::vector<std::string> adjectives = {"old", "stone", "northern", "busy",
                                                      "famous"};
  for (int i = 0; i < 50; ++i) {
    std::string id = "doc" + std::to_string(i);
    const std::string& t1 = topics[i % 5];
    const std::string& t2 = topics[(i / 5) % 5];
    const std::string& adj = adjectives[(i / 25 + i) % 5];
    std::string s0 = "The " + adj + " " + t1 + " stands near the " + t2 + ".";
    std::string s1 = "Many visitors describe the " + t1 + " as " + adj + ".";
    f.doc_texts.emplace(id, s0 + " " + s1);
    factver::Document d;
    d.doc_id = id;
    d.sentences = {s0, s1};
    d.links = {{}, {}};
    f.index.documents.emplace(id, std::move(d));
  }
  f.index.finalize();
  for (int q = 0; q < 20; ++q) {
    const std::string& t1 = topics[q % 5];
    const std::string& t2 = topics[(q + 2) % 5];
    const std::string& adj = adjectives[q % 5];
    f.queries.push_back("Is the " + adj + " " + t1 + " near the " + t2 + "?");
  }
  return f;
}

}  // namespace testsupport
