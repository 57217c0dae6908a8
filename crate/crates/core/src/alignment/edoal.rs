use super::{Alignment, Expression};
use crate::rdf::{LiteralTag, Term};
use std::fmt::Write;

const EDOAL_EQUALS: &str = "http://ns.inria.org/edoal/1.0/#equals";
const XSD_FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    out.extend(std::iter::repeat_n("  ", depth));
}

fn value(out: &mut String, v: &Term, depth: usize) {
    indent(out, depth);
    if v.is_literal() {
        let ty = match v.tag() {
            Some(LiteralTag::Datatype(dt)) => format!(" edoal:type=\"{}\"", escape(dt)),
            _ => String::new(),
        };
        let _ = writeln!(out, "<edoal:Literal edoal:string=\"{}\"{ty}/>", escape(v.value()));
    } else {
        let _ = writeln!(out, "<edoal:Instance rdf:about=\"{}\"/>", escape(v.value()));
    }
}

fn expr(out: &mut String, e: &Expression, depth: usize) {
    let open = |out: &mut String, tag: &str| {
        indent(out, depth);
        let _ = writeln!(out, "<{tag}>");
    };
    let close = |out: &mut String, tag: &str| {
        indent(out, depth);
        let _ = writeln!(out, "</{tag}>");
    };
    match e {
        Expression::Class { iri } => {
            indent(out, depth);
            let _ = writeln!(out, "<edoal:Class rdf:about=\"{}\"/>", escape(iri));
        }
        Expression::Property { iri } => {
            indent(out, depth);
            let _ = writeln!(out, "<edoal:Relation rdf:about=\"{}\"/>", escape(iri));
        }
        Expression::InverseProperty { property } => {
            open(out, "edoal:Relation");
            indent(out, depth + 1);
            out.push_str("<edoal:inverse>\n");
            expr(out, property, depth + 2);
            indent(out, depth + 1);
            out.push_str("</edoal:inverse>\n");
            close(out, "edoal:Relation");
        }
        Expression::PropertyChain { properties } => {
            open(out, "edoal:Relation");
            indent(out, depth + 1);
            out.push_str("<edoal:compose rdf:parseType=\"Collection\">\n");
            for p in properties {
                expr(out, p, depth + 2);
            }
            indent(out, depth + 1);
            out.push_str("</edoal:compose>\n");
            close(out, "edoal:Relation");
        }
        Expression::SomeValuesFrom { property, filler } => {
            let tag = match filler.as_ref() {
                Expression::HasValue { .. } => "edoal:AttributeValueRestriction",
                _ => "edoal:AttributeDomainRestriction",
            };
            open(out, tag);
            indent(out, depth + 1);
            out.push_str("<edoal:onAttribute>\n");
            expr(out, property, depth + 2);
            indent(out, depth + 1);
            out.push_str("</edoal:onAttribute>\n");
            match filler.as_ref() {
                Expression::HasValue { value: v } => {
                    indent(out, depth + 1);
                    let _ = writeln!(out, "<edoal:comparator rdf:resource=\"{EDOAL_EQUALS}\"/>");
                    indent(out, depth + 1);
                    out.push_str("<edoal:value>\n");
                    value(out, v, depth + 2);
                    indent(out, depth + 1);
                    out.push_str("</edoal:value>\n");
                }
                other => {
                    indent(out, depth + 1);
                    out.push_str("<edoal:exists>\n");
                    expr(out, other, depth + 2);
                    indent(out, depth + 1);
                    out.push_str("</edoal:exists>\n");
                }
            }
            close(out, tag);
        }
        Expression::HasValue { value: v } => value(out, v, depth),
        Expression::Intersection { operands } => {
            open(out, "edoal:Class");
            indent(out, depth + 1);
            out.push_str("<edoal:and rdf:parseType=\"Collection\">\n");
            for o in operands {
                expr(out, o, depth + 2);
            }
            indent(out, depth + 1);
            out.push_str("</edoal:and>\n");
            close(out, "edoal:Class");
        }
    }
}

/// EDOAL rendering of an alignment. Properties are always written as
/// relations since expressions do not distinguish data properties.
pub fn to_edoal(a: &Alignment) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
    out.push_str("<rdf:RDF xmlns=\"http://knowledgeweb.semanticweb.org/heterogeneity/alignment#\"\n");
    out.push_str("  xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\"\n");
    out.push_str("  xmlns:xsd=\"http://www.w3.org/2001/XMLSchema#\"\n");
    out.push_str("  xmlns:edoal=\"http://ns.inria.org/edoal/1.0/#\">\n");
    out.push_str("<Alignment>\n  <xml>yes</xml>\n  <level>2EDOAL</level>\n  <type>**</type>\n");
    let _ = writeln!(out, "  <onto1><Ontology rdf:about=\"{}\"/></onto1>", escape(&a.source));
    let _ = writeln!(out, "  <onto2><Ontology rdf:about=\"{}\"/></onto2>", escape(&a.target));
    for c in &a.correspondences {
        out.push_str("  <map>\n    <Cell>\n      <entity1>\n");
        expr(&mut out, &c.source, 4);
        out.push_str("      </entity1>\n      <entity2>\n");
        expr(&mut out, &c.target, 4);
        out.push_str("      </entity2>\n      <relation>=</relation>\n");
        let _ = writeln!(out, "      <measure rdf:datatype=\"{XSD_FLOAT}\">{}</measure>", c.confidence);
        out.push_str("    </Cell>\n  </map>\n");
    }
    out.push_str("</Alignment>\n</rdf:RDF>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{Correspondence, Relation};

    #[test]
    fn restriction_and_chain_elements() {
        let mut a = Alignment::new("s", "t");
        a.correspondences.push(Correspondence {
            source: Expression::class("http://s#AcceptedPaper"),
            target: Expression::some(Expression::property("http://t#hasDecision"), Expression::class("http://t#Acceptance")),
            relation: Relation::Equivalence,
            confidence: 0.8,
            support: 1,
        });
        a.correspondences.push(Correspondence {
            source: Expression::property("http://s#p"),
            target: Expression::chain(vec![
                Expression::inverse(Expression::property("http://t#a")),
                Expression::property("http://t#b"),
            ]),
            relation: Relation::Equivalence,
            confidence: 1.0,
            support: 1,
        });
        a.correspondences.push(Correspondence {
            source: Expression::class("http://s#X"),
            target: Expression::some(Expression::property("http://t#title"), Expression::has_value(Term::literal("a<b"))),
            relation: Relation::Equivalence,
            confidence: 1.0,
            support: 1,
        });
        let xml = to_edoal(&a);
        assert!(xml.contains("<edoal:AttributeDomainRestriction>"));
        assert!(xml.contains("<edoal:exists>"));
        assert!(xml.contains("<edoal:compose rdf:parseType=\"Collection\">"));
        assert!(xml.contains("<edoal:inverse>"));
        assert!(xml.contains("<edoal:AttributeValueRestriction>"));
        assert!(xml.contains("edoal:string=\"a&lt;b\""));
        assert_eq!(xml.matches("<Cell>").count(), 3);
    }
}
