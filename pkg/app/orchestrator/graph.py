from langgraph.graph import END, StateGraph

from app.orchestrator.nodes import (
    aggregate_node,
    evaluate_node,
    route_by_method,
    select_all_node,
    select_qubo_node,
    select_random_node,
    train_clients_node,
)
from app.orchestrator.state import RoundState

# One federated round:
#   train_clients -> select_{all|qubo|random} -> aggregate -> evaluate -> END
builder = StateGraph(RoundState)

builder.add_node("train_clients", train_clients_node)
builder.add_node("select_all", select_all_node)
builder.add_node("select_qubo", select_qubo_node)
builder.add_node("select_random", select_random_node)
builder.add_node("aggregate", aggregate_node)
builder.add_node("evaluate", evaluate_node)

builder.set_entry_point("train_clients")

builder.add_conditional_edges(
    "train_clients",
    route_by_method,
    {
        "fedavg_full": "select_all",
        "qubo": "select_qubo",
        "random": "select_random",
    },
)

builder.add_edge("select_all", "aggregate")
builder.add_edge("select_qubo", "aggregate")
builder.add_edge("select_random", "aggregate")
builder.add_edge("aggregate", "evaluate")
builder.add_edge("evaluate", END)

graph = builder.compile()
