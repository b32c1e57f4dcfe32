#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "satkit/csv.hpp"
#include "satkit/topic_graph.hpp"

namespace satkit {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string xml_unescape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        const auto end = s.find(';', i);
        const std::string ent = s.substr(i, end - i + 1);
        if (ent == "&amp;") out.push_back('&');
        else if (ent == "&lt;") out.push_back('<');
        else if (ent == "&gt;") out.push_back('>');
        else if (ent == "&quot;") out.push_back('"');
        else throw std::runtime_error("read_graphml: unknown entity " + ent);
        i = end + 1;
    }
    return out;
}

}  // namespace

void write_graphml(const TopicGraph& graph, std::ostream& out) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        << "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
        << "  <key id=\"prevalence\" for=\"node\" attr.name=\"prevalence\" attr.type=\"double\"/>\n"
        << "  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"int\"/>\n"
        << "  <key id=\"polarity\" for=\"node\" attr.name=\"polarity\" attr.type=\"string\"/>\n"
        << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
        << "  <graph id=\"topics\" edgedefault=\"undirected\">\n";
    for (const auto& n : graph.nodes) {
        out << "    <node id=\"n" << n.topic << "\">"
            << "<data key=\"label\">" << xml_escape(n.label) << "</data>"
            << "<data key=\"prevalence\">" << format_double(n.prevalence) << "</data>"
            << "<data key=\"community\">" << n.community << "</data>"
            << "<data key=\"polarity\">" << polarity_name(n.polarity) << "</data>"
            << "</node>\n";
    }
    for (const auto& e : graph.edges) {
        out << "    <edge source=\"n" << e.source << "\" target=\"n" << e.target << "\">"
            << "<data key=\"weight\">" << format_double(e.weight) << "</data>"
            << "</edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
}

namespace {

// Pulls the value of attr="..." out of an element opening tag.
std::string tag_attr(const std::string& tag, const std::string& attr) {
    const std::string needle = attr + "=\"";
    const auto pos = tag.find(needle);
    if (pos == std::string::npos) {
        throw std::runtime_error("read_graphml: missing attribute " + attr);
    }
    const auto end = tag.find('"', pos + needle.size());
    return tag.substr(pos + needle.size(), end - pos - needle.size());
}

std::string data_value(const std::string& element, const std::string& key) {
    const std::string open = "<data key=\"" + key + "\">";
    const auto pos = element.find(open);
    if (pos == std::string::npos) {
        throw std::runtime_error("read_graphml: missing data key " + key);
    }
    const auto end = element.find("</data>", pos);
    return element.substr(pos + open.size(), end - pos - open.size());
}

int node_id(const std::string& raw) {
    if (raw.empty() || raw[0] != 'n') throw std::runtime_error("read_graphml: bad node id " + raw);
    return std::stoi(raw.substr(1));
}

}  // namespace

TopicGraph read_graphml(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    TopicGraph graph;
    std::size_t pos = 0;
    while ((pos = text.find("<node ", pos)) != std::string::npos) {
        const auto end = text.find("</node>", pos);
        if (end == std::string::npos) throw std::runtime_error("read_graphml: unterminated node");
        const std::string element = text.substr(pos, end - pos + 7);
        TopicNode n;
        n.topic = node_id(tag_attr(element, "id"));
        n.label = xml_unescape(data_value(element, "label"));
        n.prevalence = std::stod(data_value(element, "prevalence"));
        n.community = std::stoi(data_value(element, "community"));
        const auto p = polarity_from_name(data_value(element, "polarity"));
        if (!p) throw std::runtime_error("read_graphml: bad polarity value");
        n.polarity = *p;
        graph.nodes.push_back(std::move(n));
        pos = end;
    }
    pos = 0;
    while ((pos = text.find("<edge ", pos)) != std::string::npos) {
        const auto end = text.find("</edge>", pos);
        if (end == std::string::npos) throw std::runtime_error("read_graphml: unterminated edge");
        const std::string element = text.substr(pos, end - pos + 7);
        TopicEdge e;
        e.source = node_id(tag_attr(element, "source"));
        e.target = node_id(tag_attr(element, "target"));
        e.weight = std::stod(data_value(element, "weight"));
        graph.edges.push_back(e);
        pos = end;
    }
    return graph;
}

void write_nodes_csv(const TopicGraph& graph, std::ostream& out) {
    CsvWriter w(out);
    w.row({"id", "label", "prevalence", "community", "polarity"});
    for (const auto& n : graph.nodes) {
        w.row({std::to_string(n.topic), n.label, format_double(n.prevalence),
               std::to_string(n.community), std::string(polarity_name(n.polarity))});
    }
}

void write_edges_csv(const TopicGraph& graph, std::ostream& out) {
    CsvWriter w(out);
    w.row({"source", "target", "weight"});
    for (const auto& e : graph.edges) {
        w.row({std::to_string(e.source), std::to_string(e.target), format_double(e.weight)});
    }
}

void write_dot(const TopicGraph& graph, std::ostream& out) {
    out << "graph topics {\n  node [shape=circle];\n";
    for (const auto& n : graph.nodes) {
        out << "  n" << n.topic << " [label=\"" << n.label
            << "\", width=" << format_double(0.2 + 3.0 * n.prevalence)
            << ", community=" << n.community
            << ", polarity=" << polarity_name(n.polarity) << "];\n";
    }
    for (const auto& e : graph.edges) {
        out << "  n" << e.source << " -- n" << e.target
            << " [weight=" << format_double(e.weight)
            << ", penwidth=" << format_double(0.5 + 4.0 * e.weight) << "];\n";
    }
    out << "}\n";
}

}  // namespace satkit
