from .render import (EmptyDataError, FigureSpec, FigureSpecError, SchemaError,
                     render)

__all__ = ["FigureSpec", "FigureSpecError", "SchemaError", "EmptyDataError", "render"]
