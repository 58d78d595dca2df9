use serde_json::{json, Value};

fn op(summary: &str, responses: &[(&str, &str)]) -> Value {
    let r: serde_json::Map<String, Value> = responses
        .iter()
        .map(|(code, d)| (code.to_string(), json!({ "description": d })))
        .collect();
    json!({ "summary": summary, "responses": r })
}

fn id_param(name: &str) -> Value {
    json!({ "name": name, "in": "path", "required": true, "schema": { "type": "string" } })
}

/// OpenAPI 3 description of the service.
pub fn document() -> Value {
    let object_spec = json!({
        "type": "object",
        "additionalProperties": false,
        "description": "Exactly one of problem, expression and design.",
        "properties": {
            "problem": { "type": "string" },
            "instance": { "type": "integer", "minimum": 0 },
            "expression": { "type": "string" },
            "design": { "type": "string", "description": "CSV text x1,...,xd,y" },
            "dim": { "type": "integer", "minimum": 1 },
            "n": { "type": "integer", "minimum": 1 },
            "sample": { "type": "string", "enum": ["uniform", "lhs"] },
            "seed": { "type": "integer", "minimum": 0 },
            "blocks": { "type": "array", "items": { "type": "integer", "minimum": 1 } },
            "lower": { "type": "array", "items": { "type": "number" } },
            "upper": { "type": "array", "items": { "type": "number" } },
            "minimize": { "type": "boolean" }
        }
    });
    let batch = json!({
        "type": "object",
        "required": ["instances"],
        "properties": {
            "instances": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["problem", "dim"],
                    "properties": {
                        "problem": { "type": "string" },
                        "seed": { "type": "integer" },
                        "dim": { "type": "integer", "minimum": 1 }
                    }
                }
            },
            "reps": { "type": "integer", "minimum": 1 },
            "sets": { "type": "string" },
            "sampling": { "type": "string", "enum": ["uniform", "lhs"] },
            "n": { "type": "integer" },
            "blocks": { "type": "array", "items": { "type": "integer" } },
            "control": { "type": "array", "items": { "type": "string" } },
            "seed": { "type": "integer" }
        }
    });
    let feature_query = json!([
        { "name": "sets", "in": "query", "schema": { "type": "string", "default": "all" } },
        { "name": "control", "in": "query", "schema": { "type": "string" }, "description": "key=value pairs separated by ';'" },
        { "name": "seed", "in": "query", "schema": { "type": "integer" } }
    ]);
    json!({
        "openapi": "3.0.3",
        "info": { "title": "lkit", "version": env!("CARGO_PKG_VERSION") },
        "paths": {
            "/api/feature-object": {
                "post": {
                    "summary": "Create a feature object",
                    "requestBody": { "content": { "application/json": { "schema": object_spec } } },
                    "responses": {
                        "201": { "description": "id, summary and set availability" },
                        "400": { "description": "expression parse error with position" },
                        "422": { "description": "invalid body" }
                    }
                }
            },
            "/api/feature-object/{id}": {
                "get": { "parameters": [id_param("id")], "summary": "Object summary", "responses": { "200": { "description": "summary" }, "404": { "description": "unknown id" } } }
            },
            "/api/feature-object/{id}/features": {
                "get": {
                    "summary": "Feature values in canonical order",
                    "parameters": [id_param("id"), feature_query[0], feature_query[1], feature_query[2]],
                    "responses": {
                        "200": { "description": "feature map" },
                        "404": { "description": "unknown id" },
                        "409": { "description": "set unavailable for this object" },
                        "422": { "description": "invalid sets or control" }
                    }
                }
            },
            "/api/feature-object/{id}/features.csv": {
                "get": {
                    "parameters": [id_param("id"), feature_query[0], feature_query[1], feature_query[2]],
                    "summary": "Feature values as CSV",
                    "responses": { "200": { "description": "text/csv" }, "404": { "description": "unknown id" }, "409": { "description": "set unavailable" } }
                }
            },
            "/api/feature-object/{id}/plot/{kind}": {
                "get": {
                    "summary": "Plot data: cellmapping, barriertree2d, barriertree3d, infocontent, function",
                    "parameters": [
                        id_param("id"),
                        id_param("kind"),
                        { "name": "approach", "in": "query", "schema": { "type": "string", "enum": ["min", "mean", "near"] } },
                        { "name": "resolution", "in": "query", "schema": { "type": "integer", "minimum": 2 } },
                        { "name": "seed", "in": "query", "schema": { "type": "integer" } },
                        { "name": "control", "in": "query", "schema": { "type": "string" } }
                    ],
                    "responses": { "200": { "description": "schema-versioned plot JSON" }, "404": { "description": "unknown id or kind" }, "409": { "description": "wrong dimension" } }
                }
            },
            "/api/batch": {
                "post": {
                    "summary": "Start a batch job",
                    "requestBody": { "content": { "application/json": { "schema": batch } } },
                    "responses": { "202": { "description": "job_id" }, "422": { "description": "invalid instances, listed by index" } }
                }
            },
            "/api/batch/{job_id}": {
                "get": { "parameters": [id_param("job_id")], "summary": "Job status", "responses": { "200": { "description": "status, progress, result_csv when done" }, "404": { "description": "unknown job" } } }
            },
            "/api/batch/{job_id}/result.csv": {
                "get": { "parameters": [id_param("job_id")], "summary": "Job result", "responses": { "200": { "description": "text/csv" }, "409": { "description": "not finished" } } }
            },
            "/api/problems": { "get": op("Built-in problems", &[("200", "problem list")]) },
            "/api/sets": { "get": op("Feature sets", &[("200", "set list")]) },
            "/api/spec": { "get": op("This document", &[("200", "OpenAPI document")]) }
        }
    })
}
