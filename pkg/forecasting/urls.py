from django.urls import include, path
from rest_framework.routers import DefaultRouter

from .views import ExperimentRunViewSet

# Create router and register viewsets
router = DefaultRouter()
router.register(r'runs', ExperimentRunViewSet, basename='run')

urlpatterns = [
    path('', include(router.urls)),
]
